import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from netboard.identity import Network, NetworkRegistry, User
from netboard.schema import parse_schema
from netboard.search import SynonymTable
from netboard.service import ClassifiedsService
from netboard.store import Store

from helpers import EVENT_XML

BIKES_XML = """<schema id="O301" category="bikes" creator="admin">
  <field visibility-in-search-filter="true">Title</field>
  <field data-type="currency" visibility-in-search-filter="true">Price</field>
  <field data-type="number" visibility-in-search-filter="true">Year</field>
  <field data-type="text">Frame</field>
</schema>
"""

BOOKS_XML = """<schema id="O302" category="books" creator="admin">
  <field visibility-in-search-filter="true">Title</field>
  <field data-type="text">Author</field>
  <field data-type="currency" visibility-in-search-filter="true">Price</field>
</schema>
"""

NETWORKS = [
    Network("jhu", "The Johns Hopkins University", frozenset({"jhu.edu"})),
    Network("umd", "University of Maryland", frozenset({"umd.edu"})),
]


class FakeClock:
    def __init__(self, start: datetime | None = None):
        self.current = start or datetime(2026, 3, 1, 12, 0, 0, tzinfo=timezone.utc)

    def __call__(self) -> datetime:
        return self.current

    def advance(self, **kwargs) -> None:
        self.current += timedelta(**kwargs)


@pytest.fixture
def clock() -> FakeClock:
    return FakeClock()


def build_service(clock, outbox_dir=None, auto_flush=True, store=None) -> ClassifiedsService:
    svc = ClassifiedsService(
        store or Store(),
        NetworkRegistry(NETWORKS),
        SynonymTable({"bike": ["bicycle"]}),
        base_url="http://testhost",
        outbox_dir=outbox_dir,
        auto_flush=auto_flush,
        clock=clock,
        pbkdf2_iterations=600,
    )
    for xml in (EVENT_XML, BIKES_XML, BOOKS_XML):
        svc.store.upsert_schema(parse_schema(xml), status="approved")
    return svc


@pytest.fixture
def service(clock, tmp_path) -> ClassifiedsService:
    return build_service(clock, outbox_dir=tmp_path / "outbox")


def activate(svc: ClassifiedsService, email: str, username: str, password: str = "password123") -> User:
    """Register + verify in one step; reads the token straight from the store."""
    svc.register(email, username, password)
    row = svc.store._one(
        "SELECT token FROM verification_tokens ORDER BY rowid DESC LIMIT 1"
    )
    return svc.verify(row["token"])


@pytest.fixture
def users(service):
    """amy and bob share a network; carol is on another one."""
    return {
        "amy": activate(service, "amy@jhu.edu", "amy_lists"),
        "bob": activate(service, "bob@cs.jhu.edu", "bob_buys"),
        "carol": activate(service, "carol@umd.edu", "carol_umd"),
    }


def bike_listing(svc, owner, *, visibility="network", location=(39.33, -76.62), **overrides):
    kwargs = dict(
        values={"Title": "Trek mountain bike", "Price": "USD 120.00", "Year": "2019", "Frame": "steel frame"},
        visibility=visibility,
        location=location,
        subcategory="mountain",
        tags=("bike", "trek"),
        description="Well loved trail bike, new brake pads.",
    )
    kwargs.update(overrides)
    return svc.create_listing(owner, "bikes", kwargs.pop("values"), **kwargs)
