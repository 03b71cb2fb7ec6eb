"""Stateful fuzzing oracle for the bridge-upgrade proof-verification bug.

Models a message bridge with three actions: Upgrade commits a trusted
root (buggy: the all-zero root is accepted), Prove marks a message as
proved under the current root, Process releases a message iff its proof
root is committed. Solidity mapping semantics apply: absent keys read
zero. The oracle is "a message must never be processed unless proved
under a trusted root"; a ghost flag records any violation, and a
randomized campaign with dictionary-biased arguments shrinks failing
sequences to a minimal counterexample.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence, Union

ZERO32 = b"\x00" * 32
ZERO20 = b"\x00" * 20
MAX_MESSAGE_LEN = 1024
_UINT64_MAX = 2**64 - 1


def message_hash(message: bytes) -> bytes:
    return hashlib.sha256(message).digest()


@dataclass(frozen=True)
class Upgrade:
    root: bytes
    confirm_at: int
    sender: bytes = ZERO20


@dataclass(frozen=True)
class Prove:
    message: bytes
    sender: bytes = ZERO20


@dataclass(frozen=True)
class Process:
    message: bytes
    sender: bytes = ZERO20


Action = Union[Upgrade, Prove, Process]


class Outcome(Enum):
    OK = "Ok"
    REVERTED = "Reverted"


@dataclass(frozen=True)
class BridgeState:
    committed: dict = field(default_factory=dict)  # root -> confirmAt (0 = absent)
    proven: dict = field(default_factory=dict)  # message hash -> root (zero = absent)
    processed: frozenset = frozenset()
    current_root: bytes = ZERO32
    ghost_unproven_process_succeeded: bool = False


def initial_state() -> BridgeState:
    return BridgeState()


def step(state: BridgeState, action: Action, patched: bool = False) -> tuple[BridgeState, Outcome]:
    """Pure transition: same (state, action) always gives the same result.

    `patched` makes Upgrade reject the all-zero root, which is the fix the
    oracle should no longer falsify.
    """
    if isinstance(action, Upgrade):
        if patched and action.root == ZERO32:
            return state, Outcome.REVERTED
        committed = dict(state.committed)
        committed[action.root] = action.confirm_at
        return replace(state, committed=committed, current_root=action.root), Outcome.OK
    if isinstance(action, Prove):
        if state.committed.get(state.current_root, 0) == 0:
            return state, Outcome.REVERTED
        proven = dict(state.proven)
        proven[message_hash(action.message)] = state.current_root
        return replace(state, proven=proven), Outcome.OK
    if isinstance(action, Process):
        digest = message_hash(action.message)
        root = state.proven.get(digest, ZERO32)
        if state.committed.get(root, 0) == 0:
            return state, Outcome.REVERTED
        ghost = state.ghost_unproven_process_succeeded or root == ZERO32
        return (
            replace(
                state,
                processed=state.processed | {digest},
                ghost_unproven_process_succeeded=ghost,
            ),
            Outcome.OK,
        )
    raise TypeError(f"unknown action {action!r}")


def oracle(state: BridgeState) -> bool:
    """Holds iff no never-proved message was ever processed successfully."""
    return not state.ghost_unproven_process_succeeded


def run_sequence(
    actions: Sequence[Action], patched: bool = False
) -> tuple[list[Outcome], int | None]:
    """Execute from a fresh state; returns outcomes and the first violating step."""
    state = initial_state()
    outcomes = []
    violation_at = None
    for i, action in enumerate(actions):
        state, outcome = step(state, action, patched=patched)
        outcomes.append(outcome)
        if violation_at is None and not oracle(state):
            violation_at = i
    return outcomes, violation_at


def _violates(actions: Sequence[Action], patched: bool) -> bool:
    return run_sequence(actions, patched)[1] is not None


# --------------------------------------------------------------------------
# Generation

_ROOT_DICT = (ZERO32, b"\x00" * 31 + b"\x01", b"\xff" * 32)
_INT_DICT = (0, 1, 2, _UINT64_MAX)
_SENDER_DICT = (ZERO20, b"\x11" * 20, b"\xfe" * 20)


def _dictionary_pool(rng: random.Random) -> list[bytes]:
    """Small per-campaign message pool; always includes the empty message."""
    pool = [b"", b"\x00"]
    for _ in range(3):
        pool.append(rng.randbytes(rng.randint(1, 8)))
    return pool


def _gen_root(rng: random.Random) -> bytes:
    if rng.random() < 0.5:
        return rng.choice(_ROOT_DICT)
    return rng.randbytes(32)


def _gen_int(rng: random.Random) -> int:
    if rng.random() < 0.5:
        return rng.choice(_INT_DICT)
    return rng.randrange(_UINT64_MAX + 1)


def _gen_message(rng: random.Random, pool: Sequence[bytes]) -> bytes:
    if rng.random() < 0.5:
        return rng.choice(list(pool))
    return rng.randbytes(rng.randint(0, min(64, MAX_MESSAGE_LEN)))


def _gen_sender(rng: random.Random) -> bytes:
    if rng.random() < 0.5:
        return rng.choice(_SENDER_DICT)
    return rng.randbytes(20)


def _gen_action(rng: random.Random, pool: Sequence[bytes]) -> Action:
    kind = rng.randrange(3)
    if kind == 0:
        return Upgrade(_gen_root(rng), _gen_int(rng), _gen_sender(rng))
    if kind == 1:
        return Prove(_gen_message(rng, pool), _gen_sender(rng))
    return Process(_gen_message(rng, pool), _gen_sender(rng))


# --------------------------------------------------------------------------
# Shrinking


def _delete_steps(actions: list[Action], patched: bool) -> list[Action]:
    """Greedy deletion to a fixed point; the result is 1-minimal."""
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(actions):
            candidate = actions[:i] + actions[i + 1 :]
            if _violates(candidate, patched):
                actions = candidate
                changed = True
            else:
                i += 1
    return actions


def _minimize_int(actions: list[Action], index: int, value: int, patched: bool) -> int:
    candidates = sorted({0, 1, 2, value // 2, value - 1, value})
    for candidate in candidates:
        if candidate < 0 or candidate == value:
            continue
        trial = list(actions)
        trial[index] = replace(actions[index], confirm_at=candidate)
        if _violates(trial, patched):
            return candidate
    return value


def _minimize_arguments(actions: list[Action], patched: bool) -> list[Action]:
    for i, action in enumerate(actions):
        if isinstance(action, Upgrade):
            if action.root != ZERO32:
                trial = list(actions)
                trial[i] = replace(action, root=ZERO32)
                if _violates(trial, patched):
                    actions = trial
            current = actions[i]
            assert isinstance(current, Upgrade)
            best = _minimize_int(actions, i, current.confirm_at, patched)
            if best != current.confirm_at:
                actions = list(actions)
                actions[i] = replace(current, confirm_at=best)
        else:
            message = action.message
            for length in range(len(message)):
                trial = list(actions)
                trial[i] = replace(action, message=message[:length])
                if _violates(trial, patched):
                    actions = trial
                    break
        current = actions[i]
        if current.sender != ZERO20:
            trial = list(actions)
            trial[i] = replace(current, sender=ZERO20)
            if _violates(trial, patched):
                actions = trial
    return list(actions)


def shrink(actions: Sequence[Action], patched: bool = False) -> list[Action]:
    """Minimize a failing sequence: step deletion, then argument shrinking."""
    if not _violates(actions, patched):
        raise ValueError("shrink() requires a violating sequence")
    reduced = _delete_steps(list(actions), patched)
    return _minimize_arguments(reduced, patched)


# --------------------------------------------------------------------------
# Campaign


@dataclass(frozen=True)
class CampaignResult:
    failed: bool
    seed: int
    runs: int
    max_len: int
    patched: bool
    failing_run: int | None = None
    minimal_sequence: tuple[Action, ...] | None = None

    def to_json(self) -> dict:
        obj = {
            "verdict": "FAIL" if self.failed else "PASS",
            "seed": self.seed,
            "runs": self.runs,
            "max_len": self.max_len,
            "patched": self.patched,
            "hash_function": "sha256",
            "failing_run": self.failing_run,
        }
        if self.minimal_sequence is not None:
            outcomes, violation_at = run_sequence(self.minimal_sequence, self.patched)
            trace = []
            for i, (action, outcome) in enumerate(zip(self.minimal_sequence, outcomes)):
                entry = {"step": i, "kind": type(action).__name__, "outcome": outcome.value}
                if isinstance(action, Upgrade):
                    entry["root"] = "0x" + action.root.hex()
                    entry["confirm_at"] = action.confirm_at
                else:
                    entry["message"] = "0x" + action.message.hex()
                entry["sender"] = "0x" + action.sender.hex()
                entry["ghost_flag_set"] = violation_at == i
                trace.append(entry)
            obj["minimal_sequence"] = trace
        return obj


def fuzz_campaign(
    seed: int, runs: int, max_len: int, patched: bool = False
) -> CampaignResult:
    """Run seeded random action sequences until the oracle breaks.

    Each run draws a fresh generator from (seed, run index), builds at
    most `max_len` actions with dictionary-biased arguments, and checks
    the oracle after every step. The first violating sequence is shrunk
    and returned; otherwise the campaign passes.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    pool_rng = random.Random(f"{seed}/pool")
    pool = _dictionary_pool(pool_rng)
    for run_index in range(runs):
        rng = random.Random(f"{seed}/{run_index}")
        length = rng.randint(1, max_len)
        actions = [_gen_action(rng, pool) for _ in range(length)]
        if _violates(actions, patched):
            minimal = shrink(actions, patched)
            return CampaignResult(
                failed=True,
                seed=seed,
                runs=runs,
                max_len=max_len,
                patched=patched,
                failing_run=run_index,
                minimal_sequence=tuple(minimal),
            )
    return CampaignResult(failed=False, seed=seed, runs=runs, max_len=max_len, patched=patched)


def exhaustive_action_pool(pool_messages: Iterable[bytes] = (b"", b"\x01")) -> list[Action]:
    """All action shapes over the dictionary argument pool."""
    actions: list[Action] = []
    for root in _ROOT_DICT:
        for value in (0, 1):
            actions.append(Upgrade(root, value))
    for message in pool_messages:
        actions.append(Prove(message))
        actions.append(Process(message))
    return actions


def exhaustive_check(max_len: int = 3, patched: bool = True) -> tuple[bool, list[Action] | None]:
    """Enumerate all dictionary-pool sequences up to `max_len`.

    Returns (True, None) when the oracle holds everywhere, else (False,
    the first violating sequence).
    """
    pool = exhaustive_action_pool()
    frontier: list[list[Action]] = [[]]
    for _ in range(max_len):
        next_frontier = []
        for prefix in frontier:
            for action in pool:
                candidate = prefix + [action]
                if _violates(candidate, patched):
                    return False, candidate
                next_frontier.append(candidate)
        frontier = next_frontier
    return True, None


def write_campaign_json(result: CampaignResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.to_json(), fh, sort_keys=True, indent=2)
        fh.write("\n")
