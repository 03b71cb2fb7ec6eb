import pytest

from guardmine.fuzz import (
    ZERO32,
    Outcome,
    Process,
    Prove,
    Upgrade,
    exhaustive_check,
    fuzz_campaign,
    initial_state,
    message_hash,
    oracle,
    run_sequence,
    shrink,
    step,
)


class TestStep:
    def test_fresh_process_reverts_on_defaults(self):
        state, outcome = step(initial_state(), Process(b"m"))
        assert outcome is Outcome.REVERTED
        assert oracle(state)

    def test_zero_root_upgrade_enables_unproven_process(self):
        state, outcome = step(initial_state(), Upgrade(ZERO32, 1))
        assert outcome is Outcome.OK
        state, outcome = step(state, Process(b"never proved"))
        assert outcome is Outcome.OK
        assert not oracle(state)

    def test_legitimate_path_keeps_ghost_clear(self):
        root = b"\x01" * 32
        state, _ = step(initial_state(), Upgrade(root, 5))
        state, outcome = step(state, Prove(b"m"))
        assert outcome is Outcome.OK
        state, outcome = step(state, Process(b"m"))
        assert outcome is Outcome.OK
        assert oracle(state)
        assert message_hash(b"m") in state.processed

    def test_prove_requires_committed_current_root(self):
        state, outcome = step(initial_state(), Prove(b"m"))
        assert outcome is Outcome.REVERTED
        # committing with confirmAt = 0 keeps the root inactive
        state, _ = step(initial_state(), Upgrade(b"\x02" * 32, 0))
        state, outcome = step(state, Prove(b"m"))
        assert outcome is Outcome.REVERTED

    def test_step_is_pure(self):
        state = initial_state()
        a = step(state, Upgrade(ZERO32, 1))
        b = step(state, Upgrade(ZERO32, 1))
        assert a == b
        assert state.committed == {}  # input untouched

    def test_patched_upgrade_rejects_zero_root(self):
        state, outcome = step(initial_state(), Upgrade(ZERO32, 1), patched=True)
        assert outcome is Outcome.REVERTED
        assert state == initial_state()

    def test_oracle_on_fresh_state(self):
        assert oracle(initial_state())

    def test_sequence_without_successful_process_holds(self):
        actions = [Upgrade(b"\x07" * 32, 3), Prove(b"x"), Prove(b"y"), Process(b"unknown")]
        # the final process targets an unproved message under a non-zero
        # current root: proven[] default is zero root, committed[0] == 0
        outcomes, violated_at = run_sequence(actions)
        assert outcomes[-1] is Outcome.REVERTED
        assert violated_at is None


class TestShrink:
    def test_two_step_counterexample_survives(self):
        actions = [
            Upgrade(b"\x03" * 32, 9),
            Prove(b"decoy"),
            Upgrade(ZERO32, 7),
            Process(b"attack"),
            Prove(b"after"),
        ]
        minimal = shrink(actions)
        assert len(minimal) == 2
        assert isinstance(minimal[0], Upgrade) and minimal[0].root == ZERO32
        assert minimal[0].confirm_at == 1
        assert isinstance(minimal[1], Process)
        assert minimal[1].message == b""

    def test_shrink_requires_violation(self):
        with pytest.raises(ValueError):
            shrink([Process(b"m")])

    def test_one_minimality(self):
        actions = [Upgrade(ZERO32, 5), Prove(b"pad"), Process(b"msg")]
        minimal = shrink(actions)
        _, violated = run_sequence(minimal)
        assert violated is not None
        for i in range(len(minimal)):
            _, still = run_sequence(minimal[:i] + minimal[i + 1 :])
            assert still is None


class TestCampaign:
    def test_finds_violation_and_minimizes(self):
        result = fuzz_campaign(seed=0, runs=256, max_len=10)
        assert result.failed
        assert len(result.minimal_sequence) == 2
        upgrade, process = result.minimal_sequence
        assert isinstance(upgrade, Upgrade) and upgrade.root == ZERO32
        assert upgrade.confirm_at != 0
        assert isinstance(process, Process)

    def test_patched_model_passes(self):
        for seed in range(5):
            assert not fuzz_campaign(seed=seed, runs=64, max_len=8, patched=True).failed

    def test_deterministic_verdicts(self):
        a = fuzz_campaign(seed=42, runs=64, max_len=8)
        b = fuzz_campaign(seed=42, runs=64, max_len=8)
        assert a == b

    def test_runs_must_be_positive(self):
        with pytest.raises(ValueError):
            fuzz_campaign(seed=0, runs=0, max_len=5)
        with pytest.raises(ValueError):
            fuzz_campaign(seed=0, runs=1, max_len=0)

    def test_single_run_without_upgrade_passes(self):
        # seed chosen so the one generated sequence never upgrades
        for seed in range(50):
            result = fuzz_campaign(seed=seed, runs=1, max_len=3)
            if not result.failed:
                assert result.minimal_sequence is None
                return
        pytest.fail("expected at least one passing single-run campaign")

    def test_trace_json_shape(self):
        result = fuzz_campaign(seed=1, runs=256, max_len=10)
        payload = result.to_json()
        assert payload["verdict"] == "FAIL"
        trace = payload["minimal_sequence"]
        assert [e["kind"] for e in trace] == ["Upgrade", "Process"]
        assert trace[0]["root"] == "0x" + "00" * 32
        assert trace[1]["ghost_flag_set"] is True
        assert payload["hash_function"] == "sha256"


class TestExhaustive:
    def test_patched_holds_to_length_three(self):
        holds, witness = exhaustive_check(3, patched=True)
        assert holds and witness is None

    def test_unpatched_falsified_within_two_steps(self):
        holds, witness = exhaustive_check(2, patched=False)
        assert not holds
        assert [type(a).__name__ for a in witness] == ["Upgrade", "Process"]
