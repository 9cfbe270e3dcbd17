import pytest
from hypothesis import given, settings, strategies as st

from carmc.aiger import parse
from carmc.artifacts import (
    CertificateError,
    WitnessError,
    check_certificate,
    check_witness,
    emit_certificate,
    emit_witness,
    parse_certificate,
    parse_witness,
)
from carmc.config import DirectionEnum, EngineConfig, VerdictEnum
from carmc.corpus import CONST0, COUNTER2, DEADBIT, TOGGLE, random_aig
from carmc.encoder import encode, reverse
from carmc.engine import car_check
from carmc.verdict import Certificate, Verdict


def test_toggle_witness_text():
    aig = parse(TOGGLE)
    verdict = car_check(encode(aig))
    witness = emit_witness(verdict)
    assert witness == "1\nb0\n0\n\n\n."
    assert check_witness(aig, witness)


def test_counter_witness_replays():
    aig = parse(COUNTER2)
    witness = emit_witness(car_check(encode(aig)))
    trace = parse_witness(aig, witness)
    assert trace.states == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert check_witness(aig, witness)


def test_short_or_foreign_witness_fails():
    aig = parse(TOGGLE)
    assert not check_witness(aig, "1\nb0\n0\n\n.")
    # latch 0 resets to 0
    assert not check_witness(aig, "1\nb0\n1\n\n\n.")
    assert not check_witness(aig, "0\nb0\n0\n\n\n.")
    assert check_witness(aig, "1\nb0\nx\n\n\n.")


def test_witness_must_end_where_bad_first_holds():
    # bad holds after one step, the third input line runs past it
    assert not check_witness(parse(TOGGLE), "1\nb0\n0\n\n\n\n.")
    aig = parse(COUNTER2)
    witness = emit_witness(car_check(encode(aig)))
    assert not check_witness(aig, witness[:-1] + "\n.")
    assert not check_witness(aig, witness[:-1] + "\n\n\n.")


def test_witness_bits_are_checked():
    aig = parse(COUNTER2)
    with pytest.raises(WitnessError):
        parse_witness(aig, "1\nb0\n0\n\n.")
    with pytest.raises(WitnessError):
        parse_witness(aig, "1\nb0\n02\n\n.")


def test_no_witness_for_safe_verdicts():
    with pytest.raises(WitnessError):
        emit_witness(Verdict.safe())
    with pytest.raises(CertificateError):
        emit_certificate(car_check(encode(parse(TOGGLE))))


def test_const0_certificate_checks():
    ts = encode(parse(CONST0))
    verdict = car_check(ts)
    text = emit_certificate(verdict)
    assert text.splitlines()[0] == "carmc-certificate 1"
    assert "0 -l0" in text.splitlines()
    certificate = parse_certificate(text)
    assert certificate == verdict.certificate
    assert check_certificate(ts, certificate)


def test_dead_state_certificate_checks():
    ts = encode(parse(DEADBIT))
    verdict = car_check(ts, EngineConfig(dead_states=True))
    assert "inf l0" in emit_certificate(verdict).splitlines()
    assert check_certificate(ts, verdict.certificate)


def _certificate(frames, index=1):
    return Certificate(direction=DirectionEnum.forward, index=index, num_latches=1, num_inputs=0, frames=frames)


def test_weakened_certificates_fail():
    ts = encode(parse(CONST0))
    # everything is reachable in an empty frame, including bad
    report = check_certificate(ts, _certificate([[], []]))
    assert not report
    assert report.failed == "safety"
    assert check_certificate(ts, _certificate([[("l0",)], []])).failed == "initiation"
    toggle = encode(parse(TOGGLE))
    assert check_certificate(toggle, _certificate([[("-l0",)], []])).failed == "consecution"


def test_malformed_certificates_fail():
    ts = encode(parse(CONST0))
    assert check_certificate(ts, _certificate([])).failed == "malformed"
    assert check_certificate(ts, _certificate([[("-l0",)]], index=1)).failed == "malformed"
    assert check_certificate(ts, _certificate([[("-i3",)], []])).failed == "malformed"
    with pytest.raises(CertificateError):
        parse_certificate("carmc-certificate 2\nend\n")
    with pytest.raises(CertificateError):
        parse_certificate("carmc-certificate 1\ndirection forward\nlatches 1\ninputs 0\nindex 1\nframes 2\n5 l0\nend\n")


def test_backward_certificate_checks_against_the_reversed_system():
    forward = encode(parse(CONST0))
    verdict = car_check(reverse(forward))
    assert verdict.kind == VerdictEnum.safe
    assert verdict.certificate.direction == DirectionEnum.backward
    assert check_certificate(forward, parse_certificate(emit_certificate(verdict)))


@settings(max_examples=20)
@given(st.integers(min_value=0, max_value=100_000))
def test_engine_artifacts_check(seed):
    aig = random_aig(seed, max_latches=5, max_inputs=2, max_ands=15)
    forward = encode(aig)
    for ts in (forward, reverse(forward)):
        verdict = car_check(ts, EngineConfig(debug_level=1))
        if verdict.kind == VerdictEnum.unsafe:
            assert check_witness(aig, emit_witness(verdict))
        elif verdict.kind == VerdictEnum.safe:
            assert check_certificate(forward, parse_certificate(emit_certificate(verdict)))
