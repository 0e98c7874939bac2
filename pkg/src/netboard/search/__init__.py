from .expand import SynonymTable, expand_query
from .geo import haversine_km, location_boost
from .index import SearchIndex, weighted_terms
from .rank import RankWeights, RankedResult, TermScore, freshness, rank, term_score
from .text import STOPWORDS, tokenize

__all__ = [
    "STOPWORDS",
    "RankWeights",
    "RankedResult",
    "SearchIndex",
    "SynonymTable",
    "TermScore",
    "expand_query",
    "freshness",
    "haversine_km",
    "location_boost",
    "rank",
    "term_score",
    "tokenize",
    "weighted_terms",
]
