"""Pairing-based proof systems: matrix programs, commit-and-prove gadgets, links and aggregation."""

from .aggregate import agg_prove, agg_setup, agg_verify
from .cap import cap_prove, cap_setup, cap_verify
from .cp_link import link_build_instance, link_prove, link_verify
from .mpoly_commit import commit, prove_eval, s1_setup, verify_eval
from .qmp import qmp_prove, qmp_setup, qmp_verify

__all__ = [
    "agg_prove",
    "agg_setup",
    "agg_verify",
    "cap_prove",
    "cap_setup",
    "cap_verify",
    "commit",
    "link_build_instance",
    "link_prove",
    "link_verify",
    "prove_eval",
    "qmp_prove",
    "qmp_setup",
    "qmp_verify",
    "s1_setup",
    "verify_eval",
]
