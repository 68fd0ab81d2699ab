import pytest

from sqlscore.errors import DegenerateGap, DegenerateTokens, GoldExecutionError
from sqlscore.metrics import (
    ErrorClass,
    EvalRecord,
    RecordResult,
    TokenUsage,
    aggregate,
    classify_error,
    evaluate_records,
    exact_set_match,
    execution_accuracy,
    performance_gap_recovered,
    sft_filter,
    token_elasticity,
    valid_efficiency_score,
)

from conftest import FIXTURE_DB_ID, FIXTURE_SOURCE


def record(rid, gold, pred, difficulty=None):
    return EvalRecord(
        id=rid, db_id=FIXTURE_DB_ID, source=FIXTURE_SOURCE,
        question="", gold_sql=gold, pred_sql=pred, difficulty=difficulty,
    )


def result(rid="r", em=False, ex=False, t_gold=0.002, t_pred=0.002,
           difficulty=None, classes=frozenset()):
    return RecordResult(
        record=record(rid, "SELECT 1", "SELECT 1", difficulty),
        em=em, ex=ex, t_gold_s=t_gold, t_pred_s=t_pred,
        pred_status="ok", error_classes=classes,
    )


class TestExactSetMatch:
    def test_identical(self):
        sql = "SELECT a FROM t WHERE x = 1"
        assert exact_set_match(sql, sql)

    def test_reflexive_on_corpus(self):
        from corpus import CORPUS

        for sql in CORPUS:
            assert exact_set_match(sql, sql), sql
            assert classify_error(sql, sql) == set(), sql

    def test_permuted_predicates(self):
        assert exact_set_match(
            "SELECT a FROM t WHERE a=1 AND b=2",
            "SELECT a FROM t WHERE b=2 AND a=1",
        )

    def test_permuted_select_items(self):
        assert exact_set_match("SELECT a, b FROM t", "SELECT b, a FROM t")

    def test_differing_limit(self):
        assert not exact_set_match(
            "SELECT a FROM t LIMIT 5", "SELECT a FROM t LIMIT 6")

    def test_missing_where(self):
        assert not exact_set_match(
            "SELECT a FROM t WHERE a > 0", "SELECT a FROM t")


class TestClassifyError:
    def test_operator_row(self):
        gold = ("SELECT COUNT(DISTINCT T1.ID) FROM Patient AS T1 INNER JOIN "
                "Laboratory AS T2 ON T1.ID = T2.ID WHERE T2.FG <= 150 OR "
                "T2.FG >= 450 AND T1.Birthday > '1980-01-01'")
        pred = ("SELECT COUNT(DISTINCT T1.ID) FROM Patient AS T1 JOIN "
                "Laboratory AS T2 ON T1.ID = T2.ID WHERE T1.Birthday > "
                "'1980-01-01' AND (T2.FG < 150 OR T2.FG > 450)")
        assert ErrorClass.OPERATOR in classify_error(gold, pred)

    def test_table_row(self):
        gold = "SELECT COUNT(driverId) FROM driverStandings WHERE raceId = 18"
        pred = ("SELECT COUNT(DISTINCT T1.driverId) FROM results AS T1 "
                "WHERE T1.raceId = 18")
        assert ErrorClass.TABLE in classify_error(gold, pred)

    def test_clause_row(self):
        gold = ("SELECT T2.Description FROM transactions_1k AS T1 INNER JOIN "
                "products AS T2 ON T1.ProductID = T2.ProductID "
                "ORDER BY T1.Amount DESC LIMIT 5")
        pred = ("SELECT T2.Description FROM transactions_1k AS T1 JOIN "
                "products AS T2 ON T1.ProductID = T2.ProductID "
                "GROUP BY T1.ProductID ORDER BY SUM(T1.Amount) DESC LIMIT 5")
        classes = classify_error(gold, pred)
        assert ErrorClass.CLAUSE in classes
        assert ErrorClass.FUNCTION in classes

    def test_subquery_row(self):
        gold = ("SELECT player_api_id FROM Player_Attributes WHERE "
                "SUBSTR(`date`, 1, 4) = '2010' ORDER BY overall_rating DESC LIMIT 1")
        pred = ("SELECT player_api_id FROM Player_Attributes WHERE "
                "substr(date,1,4) = '2010' AND overall_rating = "
                "(SELECT MAX(overall_rating) FROM Player_Attributes WHERE "
                "substr(date,1,4) = '2010')")
        assert ErrorClass.SUBQUERY in classify_error(gold, pred)

    def test_value_substitution_not_condition(self):
        gold = "SELECT a FROM t WHERE year = '1985'"
        pred = "SELECT a FROM t WHERE year = 1985"
        classes = classify_error(gold, pred)
        assert ErrorClass.VALUE in classes
        assert ErrorClass.CONDITION not in classes

    def test_operator_substitution_not_condition(self):
        gold = "SELECT a FROM t WHERE fg <= 150"
        pred = "SELECT a FROM t WHERE fg < 150"
        classes = classify_error(gold, pred)
        assert ErrorClass.OPERATOR in classes
        assert ErrorClass.CONDITION not in classes

    def test_attribute_difference(self):
        gold = "SELECT x FROM t1 AS a JOIN t2 AS b ON a.id = b.id"
        pred = "SELECT x FROM t1 AS a JOIN t2 AS b ON a.player_api_id = b.player_api_id"
        assert ErrorClass.ATTRIBUTE in classify_error(gold, pred)

    def test_self_comparison_empty(self):
        sql = "SELECT a FROM t WHERE b > 1 GROUP BY a"
        assert classify_error(sql, sql) == set()


class TestExecutionAccuracy:
    def test_all_match(self, registry, fast_timing):
        records = [
            record("1", "SELECT name FROM customers WHERE id = 1",
                   "SELECT name FROM customers WHERE id = 1"),
            record("2", "SELECT COUNT(*) FROM orders",
                   "SELECT COUNT(*) FROM orders"),
        ]
        assert execution_accuracy(records, registry, fast_timing) == 1.0

    def test_all_error(self, registry, fast_timing):
        records = [
            record("1", "SELECT 1", "SELECT * FROM missing"),
            record("2", "SELECT 1", "totally not sql"),
        ]
        assert execution_accuracy(records, registry, fast_timing) == 0.0

    def test_three_of_four(self, registry, fast_timing):
        records = [
            record("1", "SELECT id FROM customers WHERE id = 1",
                   "SELECT id FROM customers WHERE id = 1"),
            record("2", "SELECT COUNT(*) FROM orders",
                   "SELECT COUNT(*) FROM orders"),
            record("3", "SELECT id FROM orders WHERE total > 100",
                   "SELECT id FROM orders WHERE total > 100"),
            record("4", "SELECT id FROM customers WHERE city = 'Rome'",
                   "SELECT id FROM customers WHERE city = 'Paris'"),  # wrong literal
        ]
        assert execution_accuracy(records, registry, fast_timing) == 0.75

    def test_bad_gold_reported(self, registry, fast_timing):
        records = [record("1", "SELECT * FROM missing", "SELECT 1")]
        with pytest.raises(GoldExecutionError):
            execution_accuracy(records, registry, fast_timing)

    def test_bad_gold_collected_by_evaluate(self, registry, fast_timing):
        records = [
            record("ok", "SELECT 1", "SELECT 1"),
            record("bad", "SELECT * FROM missing", "SELECT 1"),
        ]
        results, defects = evaluate_records(records, registry, fast_timing)
        assert len(results) == 1
        assert len(defects) == 1
        assert isinstance(defects[0][1], GoldExecutionError)


class TestVes:
    def test_equal_times_factor_one(self, registry, fast_timing):
        records = [record("1", "SELECT COUNT(*) FROM items",
                          "SELECT COUNT(*) FROM items")]
        ves = valid_efficiency_score(records, registry, fast_timing)
        assert 0.5 < ves < 2.0  # identical statements, near-1 either side

    def test_sqrt_of_ratio(self):
        r = result(ex=True, t_gold=0.004, t_pred=0.001)
        report = aggregate([r])
        assert report.ves == pytest.approx(2.0)

    def test_incorrect_scores_zero(self):
        r = result(ex=False, t_gold=0.004, t_pred=0.001)
        assert aggregate([r]).ves == 0.0

    def test_ves_equals_ex_when_ratios_forced_one(self):
        results = [
            result(rid=str(i), ex=(i % 3 != 0), t_gold=0.002, t_pred=0.002)
            for i in range(12)
        ]
        report = aggregate(results)
        assert report.ves == report.ex


class TestAggregate:
    def test_per_difficulty(self):
        results = [
            result(rid="a", em=True, ex=True, difficulty="simple"),
            result(rid="b", em=False, ex=True, difficulty="simple"),
            result(rid="c", em=False, ex=False, difficulty="hard"),
        ]
        report = aggregate(results)
        assert report.per_difficulty["simple"]["n"] == 2
        assert report.per_difficulty["simple"]["ex"] == 1.0
        assert report.per_difficulty["hard"]["ex"] == 0.0

    def test_error_histogram_counts_each_class(self):
        results = [
            result(rid="a", ex=False,
                   classes=frozenset({ErrorClass.TABLE, ErrorClass.VALUE})),
            result(rid="b", ex=False, classes=frozenset({ErrorClass.TABLE})),
        ]
        report = aggregate(results)
        assert report.error_histogram == {"Table": 2, "Value": 1}

    def test_empty(self):
        report = aggregate([])
        assert report.n == 0 and report.em == 0.0


class TestPgr:
    def test_direct(self):
        assert performance_gap_recovered(0.5, 0.4, 0.6) == pytest.approx(0.5)

    def test_router_equals_strong(self):
        assert performance_gap_recovered(0.6, 0.4, 0.6) == 1.0

    def test_router_equals_weak(self):
        assert performance_gap_recovered(0.4, 0.4, 0.6) == 0.0

    def test_degenerate(self):
        with pytest.raises(DegenerateGap):
            performance_gap_recovered(0.5, 0.4, 0.4)


class TestTep:
    def test_unit_elasticity(self):
        base = TokenUsage(input_tokens=1000, output_tokens=0, multiplier=1.0)
        method = TokenUsage(input_tokens=1100, output_tokens=0, multiplier=1.0)
        assert token_elasticity(0.55, 0.5, method, base, n=10) == pytest.approx(1.0)

    def test_equal_accuracy_zero(self):
        base = TokenUsage(input_tokens=1000, output_tokens=0, multiplier=1.0)
        method = TokenUsage(input_tokens=1500, output_tokens=0, multiplier=1.0)
        assert token_elasticity(0.5, 0.5, method, base, n=10) == 0.0

    def test_negative_elasticity(self):
        base = TokenUsage(input_tokens=1000, output_tokens=0, multiplier=1.0)
        method = TokenUsage(input_tokens=900, output_tokens=0, multiplier=1.0)
        assert token_elasticity(0.6, 0.5, method, base, n=10) == pytest.approx(-2.0)

    def test_multiplier_weighting(self):
        base = TokenUsage(input_tokens=500, output_tokens=250, multiplier=2.0)
        method = TokenUsage(input_tokens=600, output_tokens=250, multiplier=2.0)
        # consumption: base 1000, method 1100 -> same as unit elasticity case
        assert token_elasticity(0.55, 0.5, method, base, n=5) == pytest.approx(1.0)

    def test_degenerate_tokens(self):
        usage = TokenUsage(input_tokens=1000, output_tokens=0, multiplier=1.0)
        with pytest.raises(DegenerateTokens):
            token_elasticity(0.6, 0.5, usage, usage, n=10)


def cand(question, idx, sql, gold="SELECT a FROM t"):
    return {
        "question": question,
        "reasoning": f"step {idx}",
        "candidate_sql": sql,
        "gold_sql": gold,
        "attempt_index": idx,
    }


class TestSftFilter:
    def test_three_consecutive_retained(self):
        rows = [cand("q", i, "SELECT a FROM t") for i in range(3)]
        assert sft_filter(rows, k=3) == rows

    def test_non_consecutive_dropped(self):
        rows = [
            cand("q", 1, "SELECT a FROM t"),
            cand("q", 2, "SELECT b FROM t"),
            cand("q", 3, "SELECT a FROM t"),
        ]
        assert sft_filter(rows, k=3) == []

    def test_k_one_single_match(self):
        rows = [cand("q", 1, "SELECT a FROM t")]
        assert sft_filter(rows, k=1) == rows

    def test_normalization_keywords_and_whitespace(self):
        rows = [cand("q", i, "select  a\nFROM   t") for i in range(3)]
        assert sft_filter(rows, k=3) == rows

    def test_identifier_case_preserved(self):
        rows = [cand("q", i, "SELECT A FROM t") for i in range(3)]
        # gold references lowercase a; identifier case differences must fail
        assert sft_filter(rows, k=3) == []

    def test_subset_and_idempotent(self):
        rows = (
            [cand("q1", i, "SELECT a FROM t") for i in range(4)]
            + [cand("q1", 4, "SELECT b FROM t")]
            + [cand("q2", i, "SELECT b FROM t") for i in range(2)]
        )
        kept = sft_filter(rows, k=3)
        assert all(r in rows for r in kept)
        assert sft_filter(kept, k=3) == kept

    def test_k_validation(self):
        with pytest.raises(ValueError):
            sft_filter([], k=0)
