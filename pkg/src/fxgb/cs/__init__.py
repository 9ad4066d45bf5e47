"""Constraint transcripts, gadgets, and the lowering of certification."""

from .compile import compile_cert, structure_digest, template_transcript
from .gadgets import g_compare, g_division, g_msb, g_nonzero, g_range, g_truncation
from .transcript import Transcript, VerifyResult, batched_mul_check, dumps, gap_violations, loads, verify_transcript

__all__ = [
    "Transcript",
    "VerifyResult",
    "batched_mul_check",
    "compile_cert",
    "dumps",
    "g_compare",
    "g_division",
    "g_msb",
    "g_nonzero",
    "g_range",
    "g_truncation",
    "gap_violations",
    "loads",
    "structure_digest",
    "template_transcript",
    "verify_transcript",
]
