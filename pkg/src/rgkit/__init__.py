"""Rely/guarantee verification toolkit for a parallel while-language."""

from .sorts import (Sort, State, Structure, bool_sort, enum_sort, nat_sort,
                    seq_sort, set_sort)
from .formula import (App, Expr, Lit, Preserve, Quant, RelCompose, StateRelation,
                      StateSet, TransClose, Var, classify_relation,
                      eval_assertion, hook_expression, identity_frame,
                      preserve_under, rel_compose, relation_to_assertion,
                      trans_closure, well_founded)
from .prog import (Assign, Await, Block, If, Par, Program, Seq, Skip, While,
                   free_vars, hid_set, render_expr, render_program,
                   validate_program)
from .removal import Removal, RemovalError, check_removal, erase_auxiliary
from .semantics import (Budget, Computation, ConfigGraph, Configuration,
                        EnvSpec, LabeledEdge, build_config_graph,
                        compose_computations, decompose_computation,
                        successors, to_dot)
from .satcheck import (CheckReport, Specification, SpecifiedProgram, SpecError,
                       check_sat_general, check_sat_modified, check_sat_noaux,
                       strongest_relations)
from .proofs import (Obligation, ProofNode, ProofReport, SchemaError,
                     check_proof_tree, discharge_obligation,
                     validate_rule_instance)
from .parser import ParseError, SourceFile, parse_assertion, parse_program, parse_source

__all__ = [n for n in dir() if not n.startswith("_")]
__version__ = "0.1.0"
