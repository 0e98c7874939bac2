"""netboard: a self-hosted, network-scoped classifieds service.

Listings are defined by XML category templates, searched through a TF-IDF
index with synonym expansion and location/freshness boosts, scoped to
email-verified networks with privacy redaction on every view, and discussed
in listing-contextual message threads.
"""

__version__ = "0.1.0"
