"""Test helpers: random query/AST generators over a linked fixture."""

from __future__ import annotations

from vkg.query import InferStmt, ListStmt, QueryAst, SearchStmt, VarRef


def random_ast(rng, terms: list[str], classes: list[str], relations: list[str],
               entities: list[str], rule_names: list[str],
               max_statements: int = 6) -> QueryAst:
    """A valid random composite query over the given universe."""
    n = int(rng.integers(1, max_statements + 1))
    statements = []
    bound: list[str] = []
    for i in range(n):
        var = f"Q{i}"
        kind = int(rng.integers(0, 3))
        if kind == 1 and not bound:
            kind = 0
        if kind == 0:
            stmt = SearchStmt(
                term=terms[rng.integers(0, len(terms))],
                class_filter=(classes[rng.integers(0, len(classes))]
                              if rng.random() < 0.5 else None),
                k=int(rng.integers(1, 12)),
                out_var=var,
            )
        elif kind == 1:
            stmt = InferStmt(
                rule_name=rule_names[rng.integers(0, len(rule_names))],
                in_vars=(bound[rng.integers(0, len(bound))],
                         bound[rng.integers(0, len(bound))]),
                context_entity=entities[rng.integers(0, len(entities))],
                out_var=var,
            )
        else:
            if bound and rng.random() < 0.5:
                source = VarRef(bound[rng.integers(0, len(bound))])
            else:
                source = entities[rng.integers(0, len(entities))]
            stmt = ListStmt(
                relation_alias=relations[rng.integers(0, len(relations))],
                source=source,
                out_var=var,
            )
        statements.append(stmt)
        bound.append(var)
    return QueryAst(tuple(statements))
