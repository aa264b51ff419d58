
import pytest

from uqe.data import Dataset, QESample, Task
from uqe.ensemble import (
    PredictionSet,
    average_predictions,
    greedy_select,
    load_predictions,
    predictions_to_tsv,
)
from uqe.evalmetrics import pearson


def dev_dataset(golds):
    return Dataset(
        Task.DA,
        tuple(QESample(f"g{i}", "en-de", ("a",), ("b",), g) for i, g in enumerate(golds)),
    )


def pset(model_id, scores):
    return PredictionSet(model_id, {f"g{i}": s for i, s in enumerate(scores)})


class TestAverage:
    def test_single_member_identity(self):
        p = pset("m1", [0.1, 0.2])
        assert average_predictions([p]).scores == p.scores

    def test_two_member_mean(self):
        avg = average_predictions([pset("m1", [0.2]), pset("m2", [0.6])])
        assert avg.scores == {"g0": pytest.approx(0.4)}

    def test_idempotent_on_identical(self):
        p = pset("m", [0.3, 0.7, 0.9])
        avg = average_predictions([p, p, p])
        assert avg.scores == pytest.approx(p.scores)

    def test_id_mismatch_errors(self):
        a = pset("m1", [0.1])
        b = PredictionSet("m2", {"other": 0.5})
        with pytest.raises(ValueError, match="mismatch"):
            average_predictions([a, b])


class TestGreedySelect:
    golds = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]

    def metric(self, scores_list):
        dev = dev_dataset(self.golds)
        avg = average_predictions(scores_list)
        return pearson([avg.scores[s.id] for s in dev], self.golds)

    def three_model_fixture(self):
        # m_a: best single; m_b: complementary errors (averaging helps);
        # m_c: anti-correlated noise that hurts the pair
        m_a = pset("a", [0.0, 1.2, 1.8, 3.3, 3.8, 5.1])
        m_b = pset("b", [0.2, 0.8, 2.3, 2.6, 4.4, 4.8])
        m_c = pset("c", [2.0, 0.5, 4.0, 1.0, 5.0, 0.0])
        return [m_a, m_b, m_c]

    def test_single_candidate(self):
        dev = dev_dataset(self.golds)
        sel = greedy_select([pset("only", [0.1, 0.9, 2.2, 2.9, 4.1, 5.0])], dev, Task.DA, max_steps=5)
        assert sel.members == ("only",)
        assert len(sel.trajectory) == 1

    def test_three_model_selection_matches_prefix_oracle(self):
        candidates = self.three_model_fixture()
        dev = dev_dataset(self.golds)
        sel = greedy_select(candidates, dev, Task.DA, max_steps=3)

        # exhaustive oracle over sorted-order prefixes
        singles = sorted(
            candidates, key=lambda c: (-self.metric([c]), c.model_id)
        )
        best_prefix = [singles[0]]
        best_value = self.metric(best_prefix)
        for nxt in singles[1:]:
            value = self.metric(best_prefix + [nxt])
            if value > best_value:
                best_prefix.append(nxt)
                best_value = value
            else:
                break
        assert sel.members == tuple(c.model_id for c in best_prefix)
        assert sel.trajectory[-1] == pytest.approx(best_value)
        # fixture is built so the pair beats every single and the trio fails
        assert sel.members == ("a", "b")

    def test_max_steps_one(self):
        dev = dev_dataset(self.golds)
        sel = greedy_select(self.three_model_fixture(), dev, Task.DA, max_steps=1)
        assert sel.members == ("a",)

    def test_trajectory_strictly_increasing(self):
        dev = dev_dataset(self.golds)
        sel = greedy_select(self.three_model_fixture(), dev, Task.DA, max_steps=3)
        assert all(b > a for a, b in zip(sel.trajectory, sel.trajectory[1:]))

    def test_ensemble_at_least_best_single(self):
        candidates = self.three_model_fixture()
        dev = dev_dataset(self.golds)
        sel = greedy_select(candidates, dev, Task.DA, max_steps=3)
        best_single = max(self.metric([c]) for c in candidates)
        assert sel.trajectory[-1] >= best_single

    def test_deterministic_with_ties(self):
        p1 = pset("z-model", [0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
        p2 = PredictionSet("a-model", dict(p1.scores))
        dev = dev_dataset(self.golds)
        sel1 = greedy_select([p1, p2], dev, Task.DA, max_steps=2)
        sel2 = greedy_select([p2, p1], dev, Task.DA, max_steps=2)
        assert sel1 == sel2
        assert sel1.members[0] == "a-model"

    def test_selection_cap(self):
        candidates = self.three_model_fixture()
        dev = dev_dataset(self.golds)
        for cap in (1, 2, 3):
            sel = greedy_select(candidates, dev, Task.DA, max_steps=cap)
            assert len(sel.members) <= cap

    def test_degenerate_candidate_errors_with_id(self):
        dev = dev_dataset(self.golds)
        flat = pset("flat", [0.5] * 6)
        with pytest.raises(ValueError, match="flat"):
            greedy_select([flat], dev, Task.DA, max_steps=2)


class TestPredictionIO:
    def test_round_trip(self, tmp_path):
        p = pset("m", [0.125, -3.5, 0.1])
        path = tmp_path / "preds.tsv"
        path.write_text(predictions_to_tsv(p), encoding="utf-8")
        loaded = load_predictions(path, model_id="m")
        assert loaded == p

    def test_model_id_from_filename(self, tmp_path):
        path = tmp_path / "model-7.tsv"
        path.write_text(predictions_to_tsv(pset("x", [0.5])), encoding="utf-8")
        assert load_predictions(path).model_id == "model-7"

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("nope\n", encoding="utf-8")
        with pytest.raises(ValueError, match="header"):
            load_predictions(path)
