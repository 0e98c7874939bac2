"""Listing-contextual messaging and outbound email notifications.

Every conversation is scoped to one listing and one inquirer; the subject is a
frozen copy of the listing title at the moment the thread starts, so later
title edits never relabel old conversations. Deletion is per-user soft delete:
a message a participant deleted stays fully visible to the other participant.

Notifications are written to an outbox directory as RFC-5322-style text files
instead of being handed to an SMTP relay. They deliberately contain only a
link to the inbox: no message body and no sender address ever leaves the site.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import OutboxUnwritable

FOLDERS = ("inbox", "sent", "deleted")

KIND_NEW_MESSAGE = "new_message"
KIND_VERIFICATION = "verification"

MAX_BODY_CHARS = 10_000


@dataclass(frozen=True)
class MessageThread:
    thread_id: str
    listing_id: str
    inquirer_id: str
    owner_id: str
    subject: str
    created_at: str

    def counterpart_of(self, user_id: str) -> str:
        return self.owner_id if user_id == self.inquirer_id else self.inquirer_id

    def has_participant(self, user_id: str) -> bool:
        return user_id in (self.inquirer_id, self.owner_id)


@dataclass(frozen=True)
class Message:
    message_id: str
    thread_id: str
    sender_id: str
    body: str
    sent_at: str
    read_by_recipient: bool = False
    deleted_by: frozenset[str] = field(default_factory=frozenset)


@dataclass(frozen=True)
class OutboundNotification:
    recipient_email: str
    kind: str  # new_message | verification
    inbox_url: str
    created_at: str
    thread_id: str | None = None
    latest_message_id: str | None = None
    token: str | None = None


def recipient_of(message: Message, thread: MessageThread) -> str:
    """The participant a message is addressed to."""
    return thread.counterpart_of(message.sender_id)


def in_folder(message: Message, thread: MessageThread, user_id: str, folder: str) -> bool:
    """Folder membership for one user's view of a message.

    inbox    addressed to the user and not deleted by them
    sent     authored by the user and not deleted by them
    deleted  anything the user deleted, sent or received
    """
    deleted = user_id in message.deleted_by
    if folder == "deleted":
        return deleted
    if deleted:
        return False
    if folder == "inbox":
        return recipient_of(message, thread) == user_id
    if folder == "sent":
        return message.sender_id == user_id
    raise ValueError(f"unknown folder {folder!r}")


def is_unread(message: Message, thread: MessageThread, user_id: str) -> bool:
    return (
        recipient_of(message, thread) == user_id
        and not message.read_by_recipient
        and user_id not in message.deleted_by
    )


def dedupe_notifications(
    pending: list[tuple[int, OutboundNotification]],
) -> list[tuple[list[int], OutboundNotification]]:
    """Collapse queued notifications sharing (recipient, thread) into one file
    carrying the latest message id; verification mails pass through per token."""
    grouped: dict[tuple, tuple[list[int], OutboundNotification]] = {}
    for queue_id, note in pending:
        if note.kind == KIND_NEW_MESSAGE:
            key = (note.kind, note.recipient_email, note.thread_id)
        else:
            key = (note.kind, note.recipient_email, note.token)
        if key in grouped:
            ids, _older = grouped[key]
            ids.append(queue_id)
            grouped[key] = (ids, note)  # later rows win: latest message id
        else:
            grouped[key] = ([queue_id], note)
    return list(grouped.values())


def render_notification(note: OutboundNotification) -> str:
    """Plain-text mail: headers plus a link-only body."""
    if note.kind == KIND_VERIFICATION:
        subject = "Verify your account"
        body = (
            "Welcome! Confirm your email address by opening this link:\n\n"
            f"    {note.inbox_url}\n\n"
            "The link expires in 48 hours.\n"
        )
    else:
        subject = "You have a new message"
        body = (
            "Someone wrote to you about one of your conversations.\n"
            "Sign in to read and reply:\n\n"
            f"    {note.inbox_url}\n"
        )
    return (
        f"To: {note.recipient_email}\n"
        f"Subject: {subject}\n"
        f"Date: {note.created_at}\n"
        "\n"
        f"{body}"
    )


def write_outbox_files(
    batches: list[tuple[list[int], OutboundNotification]],
    outbox_dir: str | Path,
    unix_ts: int,
    start_seq: int = 0,
) -> list[Path]:
    """Write one ``{unix_ts}-{seq}.eml`` file per deduplicated notification.

    Raises OutboxUnwritable without consuming anything if the directory cannot
    be written (callers keep the queue for a later retry: at-least-once).
    """
    outbox = Path(outbox_dir)
    try:
        outbox.mkdir(parents=True, exist_ok=True)
        probe = outbox / ".probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OutboxUnwritable(f"outbox directory not writable: {exc}") from exc

    written: list[Path] = []
    seq = start_seq
    for _queue_ids, note in batches:
        path = outbox / f"{unix_ts}-{seq:04d}.eml"
        try:
            path.write_text(render_notification(note))
        except OSError as exc:
            for earlier in written:
                try:
                    earlier.unlink()
                except OSError:
                    pass
            raise OutboxUnwritable(f"failed writing {path.name}: {exc}") from exc
        written.append(path)
        seq += 1
    if written:
        dirfd = None
        try:
            dirfd = os.open(outbox, os.O_RDONLY)
            os.fsync(dirfd)
        except OSError:
            pass
        finally:
            if dirfd is not None:
                os.close(dirfd)
    return written
