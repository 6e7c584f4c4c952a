from vestbench.library import CodingStrategy, EventKind
from vestbench.simulate import (
    constant_latency_responder,
    distribution_responder,
    empirical_row_distributions,
    exact_accuracy_cohort,
    simulate_cohort,
    total_variation,
)
from vestbench.trials import (
    identification_accuracy,
    match_responses,
    report_from_sessions,
    selection_delay,
)


def test_exact_accuracy_cohort_hits_rate_exactly():
    sessions = exact_accuracy_cohort(0.7918, 10, 50, CodingStrategy.SEMANTIC, seed=5)
    results = [match_responses(s) for s in sessions]
    total = sum(len(r.matched) for r in results)
    correct = sum(1 for r in results for m in r.matched if m.is_correct)
    assert total == 500
    assert correct == round(0.7918 * 500)


def test_constant_latency_mean_exact():
    sessions = simulate_cohort(
        constant_latency_responder(1790), 4, 8, CodingStrategy.POSITIONAL, seed=9
    )
    for s in sessions:
        assert selection_delay(match_responses(s)).mean_ms == 1790


def test_distribution_responder_total_variation_small():
    table = {
        e: {e: 0.7, **{o: 0.3 / 7 for o in EventKind if o is not e}} for e in EventKind
    }
    responder = distribution_responder(table, seed=42)
    sessions = simulate_cohort(responder, 20, 40, CodingStrategy.SEMANTIC, seed=100)
    observed = empirical_row_distributions(sessions)
    worst = max(total_variation(observed[e], table[e]) for e in EventKind)
    assert worst < 0.15  # 800 stimuli; the full 10k check lives in acceptance


def test_report_partitions_by_strategy_and_load():
    fast = constant_latency_responder(1000)
    semantic = simulate_cohort(fast, 2, 8, CodingStrategy.SEMANTIC, seed=1)
    positional = simulate_cohort(fast, 3, 8, CodingStrategy.POSITIONAL, seed=2)
    report = report_from_sessions(semantic + positional)
    assert report["by_strategy"]["semantic"]["n_sessions"] == 2
    assert report["by_strategy"]["positional"]["n_sessions"] == 3
    assert report["by_strategy"]["semantic"]["accuracy_mean"] == 1.0
    assert report["by_strategy"]["positional"]["delay_mean_ms"] == 1000


def test_accuracy_mean_over_equal_sessions_is_pooled_rate():
    sessions = exact_accuracy_cohort(0.75, 8, 16, CodingStrategy.SEMANTIC, seed=3)
    accuracies = [identification_accuracy(match_responses(s)) for s in sessions]
    assert abs(sum(accuracies) / len(accuracies) - 0.75) < 1e-12
