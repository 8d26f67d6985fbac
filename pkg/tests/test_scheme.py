import itertools
import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import KS_GRID, identity_perms, ks_config, subsets
from mupir.core import (
    BitRef,
    ConfigurationError,
    IncompleteTranscriptError,
    MessageSet,
    ProtocolViolation,
    QueryElement,
    SystemConfig,
    capacity,
    hex_to_bits,
    query_cardinality,
    rate_of,
)
from mupir.scheme import (
    build_plan,
    canonical_json,
    canonical_shape,
    decode,
    evaluate_answers,
    generate_plan,
    plan_from_dict,
    plan_to_dict,
    verify_plan,
)


def terms_of(elements):
    return sorted(sorted(el.terms) for el in elements)


def a(p):
    return BitRef(1, p)


def b(p):
    return BitRef(2, p)


def answer_all(plan, messages):
    return [evaluate_answers(messages, q, source=s) for s, q in enumerate(plan.query_sets, start=1)]


def test_k2s2_tables_with_identity_permutations(k2s2_config):
    plan = build_plan(k2s2_config, 1, identity_perms(2, 4))
    assert terms_of(plan.query_sets[0]) == terms_of(
        [QueryElement(0, frozenset({a(1)})), QueryElement(0, frozenset({b(1)})), QueryElement(0, frozenset({a(3), b(2)}))]
    )
    assert terms_of(plan.query_sets[1]) == terms_of(
        [QueryElement(0, frozenset({a(2)})), QueryElement(0, frozenset({b(2)})), QueryElement(0, frozenset({a(4), b(1)}))]
    )
    verify_plan(plan)


@pytest.mark.parametrize("seed", range(20))
def test_k2s2_structure_up_to_relabeling(k2s2_config, seed):
    plan = generate_plan(k2s2_config, 1, seed)
    verify_plan(plan)
    s1, s2 = plan.query_sets
    for mine, theirs in [(s1, s2), (s2, s1)]:
        (pair,) = [el for el in mine if el.round == 2]
        (their_b,) = [el for el in theirs if el.messages == {2} and el.round == 1]
        assert pair.terms - {t for t in pair.terms if t.message == 1} == their_b.terms
    desired = sorted(t.position for q in plan.query_sets for el in q for t in el.terms if t.message == 1)
    assert desired == [1, 2, 3, 4]


@pytest.mark.parametrize("S", range(1, 6))
def test_single_message_downloads_everything(S):
    plan = generate_plan(ks_config(1, S), 1, 7)
    assert all(len(q) == 1 and q[0].round == 1 for q in plan.query_sets)
    assert plan.L == S and plan.download_size == S
    assert rate_of(plan.L, plan.download_size) == 1


def test_three_messages_two_sources():
    plan = generate_plan(ks_config(3, 2), 1, 0)
    for q in plan.query_sets:
        rounds = sorted(el.round for el in q)
        assert rounds == [1, 1, 1, 2, 2, 2, 3]
    assert query_cardinality(2, 3) == 7
    assert plan.fresh_used[0] == 8 == plan.L
    assert rate_of(plan.L, plan.download_size) == rate_of(8, 14)


def test_rejects_bad_theta_and_oversize():
    with pytest.raises(ConfigurationError):
        generate_plan(SystemConfig(2, 1, 2), 3, 0)
    with pytest.raises(ConfigurationError):
        generate_plan(SystemConfig(2, 1, 2), 0, 0)
    with pytest.raises(OverflowError):
        generate_plan(SystemConfig(7, 1, 10), 1, 0)


def test_build_plan_rejects_non_permutation(k2s2_config):
    with pytest.raises(ConfigurationError):
        build_plan(k2s2_config, 1, [(1, 2, 3, 3), (1, 2, 3, 4)])


# -- answers ---------------------------------------------------------------


def test_singleton_readout():
    messages = MessageSet((hex_to_bits("a", 4),))
    sheet = evaluate_answers(messages, [QueryElement(5, frozenset({BitRef(1, 3)}))])
    assert sheet.bits == {5: 1}


def test_two_term_xor():
    messages = MessageSet((hex_to_bits("8", 4), hex_to_bits("4", 4)))
    sheet = evaluate_answers(messages, [QueryElement(1, frozenset({BitRef(1, 1), BitRef(2, 2)}))])
    assert sheet.bits == {1: 0}


def test_out_of_range_is_protocol_violation():
    messages = MessageSet(((0, 1),))
    with pytest.raises(ProtocolViolation):
        evaluate_answers(messages, [QueryElement(1, frozenset({BitRef(1, 3)}))])
    with pytest.raises(ProtocolViolation):
        evaluate_answers(messages, [QueryElement(1, frozenset({BitRef(2, 1)}))])


def test_k2s2_answers(k2s2_config):
    W1, W2 = hex_to_bits("b", 4), hex_to_bits("6", 4)
    plan = build_plan(k2s2_config, 1, identity_perms(2, 4))
    sheets = answer_all(plan, MessageSet((W1, W2)))
    got = [[sheet.bits[el.id] for el in q] for sheet, q in zip(sheets, plan.query_sets)]
    # a1, b1, a3+b2 | a2, b2, a4+b1 by direct indexing
    expected = [[W1[0], W2[0], W1[2] ^ W2[1]], [W1[1], W2[1], W1[3] ^ W2[0]]]
    assert got == expected == [[1, 0, 0], [0, 1, 1]]


# -- decoding ----------------------------------------------------------------


@pytest.mark.parametrize("theta", [1, 2])
def test_k2s2_decodes_every_message_pair(k2s2_config, theta):
    plan = generate_plan(k2s2_config, theta, 11)
    for w1, w2 in itertools.product(itertools.product((0, 1), repeat=4), repeat=2):
        messages = MessageSet((w1, w2))
        assert decode(plan, answer_all(plan, messages)) == messages.message(theta)


@pytest.mark.parametrize("S", range(1, 5))
def test_single_message_decode_is_unpermuted_concatenation(S):
    plan = generate_plan(ks_config(1, S), 1, 3)
    messages = MessageSet.random(1, S, random.Random(S))
    sheets = answer_all(plan, messages)
    readout = {q[0].sorted_terms()[0].position: sheet.bits[q[0].id] for q, sheet in zip(plan.query_sets, sheets)}
    assert decode(plan, sheets) == tuple(readout[p] for p in range(1, S + 1)) == messages.message(1)


@pytest.mark.parametrize("K,S", [(2, 2), (3, 2), (2, 3), (3, 3)])
def test_fault_injection_hits_exactly_the_referencing_bits(K, S):
    plan = generate_plan(ks_config(K, S), K, 5)
    messages = MessageSet.random(K, plan.L, random.Random(1))
    sheets = answer_all(plan, messages)
    perm = plan.permutations[K - 1]
    for s, q in enumerate(plan.query_sets):
        for el in q:
            broken = [sh if i != s else type(sh)(sh.source, {**sh.bits, el.id: sh.bits[el.id] ^ 1}) for i, sh in enumerate(sheets)]
            got = decode(plan, broken)
            wrong = {p for p in range(1, plan.L + 1) if got[p - 1] != messages.message(K)[p - 1]}
            expected = {
                perm[i] for i, e in enumerate(plan.ledger.entries) if e.carrier == el.id or el.id in e.side_info
            }
            assert wrong == expected


def test_missing_answer_is_incomplete(k2s2_config):
    plan = generate_plan(k2s2_config, 1, 0)
    sheets = answer_all(plan, MessageSet(((0,) * 4, (1,) * 4)))
    with pytest.raises(IncompleteTranscriptError):
        decode(plan, sheets[:1])


# -- shape -------------------------------------------------------------------


def test_canonical_shape(k2s2_config):
    plan = build_plan(k2s2_config, 1, identity_perms(2, 4))
    assert canonical_shape(plan.query_sets[0]) == {(1,): 1, (2,): 1, (1, 2): 1}
    assert canonical_shape([]) == {}
    plan = generate_plan(ks_config(3, 2), 2, 0)
    assert canonical_shape(plan.query_sets[1]) == {m: 1 for m in subsets(3)}


# -- properties over the grid --------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(KS_GRID), st.data(), st.integers(0, 2**32))
def test_roundtrip_rate_symmetry(ks, data, seed):
    K, S = ks
    theta = data.draw(st.integers(1, K))
    plan = generate_plan(ks_config(K, S), theta, seed)
    verify_plan(plan)
    messages = MessageSet.random(K, plan.L, random.Random(seed))
    assert decode(plan, answer_all(plan, messages)) == messages.message(theta)
    assert plan.download_size == S * query_cardinality(S, K)
    assert rate_of(plan.L, plan.download_size) == capacity(S, K)
    reference = canonical_shape(generate_plan(ks_config(K, S), 1, 0).query_sets[0])
    assert all(canonical_shape(q) == reference for q in plan.query_sets)


def test_same_seed_same_plan():
    config = SystemConfig(3, 2, 2)
    assert generate_plan(config, 2, 99) == generate_plan(config, 2, 99)
    assert generate_plan(config, 2, 99) != generate_plan(config, 2, 100)


def test_plan_json_roundtrip():
    plan = generate_plan(SystemConfig(3, 1, 3), 2, 4)
    text = canonical_json(plan_to_dict(plan))
    again = plan_from_dict(json.loads(text))
    assert again == plan
    assert canonical_json(plan_to_dict(again)) == text
    first = json.loads(text)["query_sets"][0][0]
    assert all(isinstance(t, list) and len(t) == 2 for t in first["terms"])
