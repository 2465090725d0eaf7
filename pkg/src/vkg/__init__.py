"""vkg: a hybrid knowledge store pairing a triple graph with word embeddings.

Entities live twice: as nodes in an indexed, schema-grounded triple graph
and as tokens in a trained embedding model, tied together by hasVector
links over a shared vocabulary.  Composite queries decompose into
vector-side similarity searches and graph-side list/infer subqueries.
"""

from .embedding import EmbeddingModel, TrainingConfig, train
from .errors import VkgError
from .ingest import Document, Gazetteer, RelationTemplate, build_corpus
from .kg import Graph, Literal, Schema, Triple, normalize
from .linking import LinkTable, audit_report, link_all, relink, resolve_vector
from .query import (
    Bindings,
    Plan,
    QueryAst,
    decompose,
    execute,
    format_bindings,
    parse,
    unparse,
    vkg_search,
)
from .rules import Alert, Rule, RuleSet, builtin_rules, evaluate, load_rules

__version__ = "0.1.0"

__all__ = [
    "Alert",
    "Bindings",
    "Document",
    "EmbeddingModel",
    "Gazetteer",
    "Graph",
    "LinkTable",
    "Literal",
    "Plan",
    "QueryAst",
    "RelationTemplate",
    "Rule",
    "RuleSet",
    "Schema",
    "TrainingConfig",
    "Triple",
    "VkgError",
    "audit_report",
    "build_corpus",
    "builtin_rules",
    "decompose",
    "evaluate",
    "execute",
    "format_bindings",
    "link_all",
    "load_rules",
    "normalize",
    "parse",
    "relink",
    "resolve_vector",
    "train",
    "unparse",
    "vkg_search",
    "__version__",
]
