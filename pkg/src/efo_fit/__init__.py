"""Answer existential first-order queries over knowledge graphs by fuzzy inference."""
from .fuzzy import FuzzyMatrix, TNorm
from .kg import KnowledgeGraph, load_triples
from .logic import parse_efo1, parse_lisp, to_dnf

__version__ = "0.1.0"

__all__ = ["FuzzyMatrix", "KnowledgeGraph", "TNorm", "load_triples", "parse_efo1", "parse_lisp", "to_dnf"]
