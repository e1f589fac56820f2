"""Task-oriented spoken dialogue engine for railway timetable inquiries.

The package detects and repairs human-machine miscommunication with two
kinds of expectations about the next user turn: word-class predictions
passed down to the recognition front end, and pragmatic expectations the
dialogue manager matches utterances against.  A stochastic error channel
and scripted cooperative callers allow whole inquiry dialogues to be
simulated and measured.
"""

__version__ = "0.1.0"

from .frames import (  # noqa: F401
    IllegalTransition,
    MergeMode,
    SemanticFrame,
    Slot,
    SlotStore,
    Status,
    empty_store,
    frame_conflicts,
    merge_frame,
)
