import numpy as np
import pytest

from drclip.data import (
    AteDataset,
    Dataset,
    MaskedVector,
    load_ate_csv,
    load_missing_csv,
    save_missing_csv,
)
from drclip.errors import (
    BadValue,
    EmptyArm,
    InconsistentRow,
    MaskedAccess,
    MissingColumn,
)

SCHEMA = {"covariates": ["x1", "x2", "x3", "x4"], "response": "r", "outcome": "y"}
HEADER = "x1,x2,x3,x4,r,y\n"


def write(tmp_path, body, name="data.csv", header=HEADER):
    path = tmp_path / name
    path.write_text(header + body, encoding="utf-8")
    return path


def test_single_observed_row(tmp_path):
    ds = load_missing_csv(write(tmp_path, "1.0,10.0,0.216,400.0,1,210.0\n"), SCHEMA)
    assert ds.n == 1 and ds.p == 4
    assert ds.response.tolist() == [1]
    assert ds.outcome.take([0]).tolist() == [210.0]
    np.testing.assert_array_equal(ds.covariates[0], [1.0, 10.0, 0.216, 400.0])


def test_empty_outcome_masked_when_unlabeled(tmp_path):
    ds = load_missing_csv(write(tmp_path, "1.0,10.0,0.216,400.0,0,\n"), SCHEMA)
    assert not ds.outcome.mask[0]
    with pytest.raises(MaskedAccess):
        ds.outcome.take([0])


def test_na_token_is_missing(tmp_path):
    ds = load_missing_csv(write(tmp_path, "1,10,0.2,400,0,NA\n"), SCHEMA)
    assert ds.outcome.n_observed == 0


def test_missing_response_column(tmp_path):
    path = write(tmp_path, "1,10,0.2,400,210.0\n", header="x1,x2,x3,x4,y\n")
    with pytest.raises(MissingColumn):
        load_missing_csv(path, SCHEMA)


@pytest.mark.parametrize("body", [
    "1,10,0.2,400,1,not_a_number\n",   # outcome garbage
    "1,10,0.2,400,1,inf\n",            # non-finite outcome
    "1,10,0.2,400,2,210.0\n",          # response not binary
    "1,10,abc,400,1,210.0\n",          # covariate garbage
    "1,10,,400,1,210.0\n",             # missing covariate cell is rejected
    "1,10,0.2,400,1,N/A\n",            # only '' and 'NA' mean missing
])
def test_bad_values(tmp_path, body):
    with pytest.raises(BadValue):
        load_missing_csv(write(tmp_path, body), SCHEMA)


def test_labeled_row_with_empty_outcome(tmp_path):
    with pytest.raises(InconsistentRow):
        load_missing_csv(write(tmp_path, "1,10,0.2,400,1,\n"), SCHEMA)


def test_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(42)
    n = 57
    r = rng.integers(0, 2, n)
    r[0], r[1] = 1, 0
    y = rng.standard_normal(n) * 1e3 + np.pi
    ds = Dataset(
        covariates=rng.standard_normal((n, 4)) * 123.456,
        response=r,
        outcome=MaskedVector(y, mask=r == 1),
    )
    path = tmp_path / "rt.csv"
    save_missing_csv(ds, path, SCHEMA)
    back = load_missing_csv(path, SCHEMA)
    np.testing.assert_array_equal(back.covariates, ds.covariates)
    np.testing.assert_array_equal(back.response, ds.response)
    np.testing.assert_array_equal(back.outcome.mask, ds.outcome.mask)
    obs = ds.outcome.mask
    assert np.array_equal(back.outcome.values[obs], ds.outcome.values[obs])


def test_masked_counter_stays_zero_on_valid_access():
    mv = MaskedVector([1.0, 2.0, np.nan], mask=[True, True, False])
    mv.take([0, 1])
    mv.take(np.array([True, True, False]))
    assert mv.masked_reads == 0


def test_masked_counter_counts_violations():
    mv = MaskedVector([1.0, np.nan, np.nan], mask=[True, False, False])
    with pytest.raises(MaskedAccess):
        mv.take([0, 1, 2])
    assert mv.masked_reads == 2


def test_dataset_rejects_mask_response_disagreement():
    with pytest.raises(InconsistentRow):
        Dataset(
            covariates=np.ones((2, 1)),
            response=np.array([1, 0]),
            outcome=MaskedVector([1.0, 2.0]),
        )


def test_dataset_rejects_nonbinary_response():
    with pytest.raises(BadValue):
        Dataset(
            covariates=np.ones((2, 1)),
            response=np.array([1, 2]),
            outcome=MaskedVector([1.0, 2.0], mask=[True, False]),
        )


ATE_SCHEMA = {"covariates": ["x1", "x2"], "treatment": "a"}
ATE_HEADER = "x1,x2,a,y1,y2\n"


def test_ate_two_outcomes(tmp_path):
    body = "0.1,1,1,5.0,1.0\n0.2,2,1,6.0,2.0\n0.3,3,0,1.0,3.0\n0.4,4,0,2.0,4.0\n"
    path = write(tmp_path, body, header=ATE_HEADER)
    datasets = load_ate_csv(path, ATE_SCHEMA, ["y1", "y2"])
    assert len(datasets) == 2
    assert all(ds.n == 4 for ds in datasets)
    assert datasets[0].covariates is datasets[1].covariates
    assert datasets[0].treatment is datasets[1].treatment
    np.testing.assert_array_equal(datasets[0].outcome, [5.0, 6.0, 1.0, 2.0])
    np.testing.assert_array_equal(datasets[1].outcome, [1.0, 2.0, 3.0, 4.0])


def test_ate_all_treated_is_empty_arm(tmp_path):
    body = "0.1,1,1,5.0,1.0\n0.2,2,1,6.0,2.0\n"
    with pytest.raises(EmptyArm):
        load_ate_csv(write(tmp_path, body, header=ATE_HEADER), ATE_SCHEMA, ["y1"])


def test_ate_na_outcome_is_bad_value(tmp_path):
    body = "0.1,1,1,NA,1.0\n0.2,2,0,6.0,2.0\n"
    with pytest.raises(BadValue):
        load_ate_csv(write(tmp_path, body, header=ATE_HEADER), ATE_SCHEMA, ["y1"])


def test_ate_dataset_validation():
    with pytest.raises(EmptyArm):
        AteDataset(covariates=np.ones((2, 1)), treatment=np.array([1, 1]),
                   outcome=np.array([1.0, 2.0]))
    with pytest.raises(BadValue):
        AteDataset(covariates=np.array([[1.0], [np.inf]]), treatment=np.array([1, 0]),
                   outcome=np.array([1.0, 2.0]))
