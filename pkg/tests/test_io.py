"""Serialization round trips and malformed-input diagnostics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stepvarma import (
    ArmaSpec,
    AxiallySymmetric,
    DenseCorrelation,
    DiagonalVarmaModel,
    IsotropicMatern,
    SpaceTimeData,
    canonical_partition,
    grid_sites,
)
from stepvarma.io import (
    DataFormatError,
    model_from_dict,
    model_to_dict,
    partition_from_dict,
    partition_to_dict,
    read_data_csv,
    skeleton_from_dict,
    skeleton_to_dict,
    write_data_csv,
)


def example_models():
    spec = ArmaSpec(p=2, q=1, mu=0.5, beta1=0.01, sigma=1.3, phi=(0.4, 0.2), pi_ma=(0.3,))
    yield DiagonalVarmaModel(
        sites=((0.0,), (1.5,)), arma=(spec, spec), innovation=IsotropicMatern(0.3, 1.5)
    )
    yield DiagonalVarmaModel(
        sites=((0.0,), (2.0,)),
        arma=(spec, spec),
        innovation=DenseCorrelation(R=np.array([[1.0, 0.4], [0.4, 1.0]])),
    )
    inn = AxiallySymmetric(
        alpha_m=(0.5, 0.8), kappa_m=(1.0, 0.9), xi=0.9, tau=0.2, n_lon=4,
        latitudes=(0.0, 1.0),
    )
    white = ArmaSpec(p=0, q=0, sigma=1.0)
    yield DiagonalVarmaModel(sites=grid_sites(4, 2), arma=(white,) * 8, innovation=inn)


class TestModelJson:
    def test_round_trip(self):
        for model in example_models():
            back = model_from_dict(model_to_dict(model))
            assert back.sites == model.sites
            assert back.arma == model.arma
            assert type(back.innovation) is type(model.innovation)

    def test_skeleton_round_trip(self):
        for model in example_models():
            sk = model.skeleton()
            back = skeleton_from_dict(skeleton_to_dict(sk))
            assert back == sk

    def test_partition_round_trip(self):
        model = next(iter(example_models()))
        part = canonical_partition(model.skeleton())
        assert partition_from_dict(partition_to_dict(part)) == part

    def test_bad_documents(self):
        with pytest.raises(DataFormatError):
            model_from_dict({"sites": [[0.0]], "arma": [], "innovation": {"type": "nope"}})
        with pytest.raises(DataFormatError):
            skeleton_from_dict({"p": 1, "q": 0})  # no sites anywhere
        with pytest.raises(DataFormatError):
            partition_from_dict({"steps": [{"theta": ["a"]}]})


class TestDataCsv:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        values = rng.standard_normal((7, 3)) * np.pi * 1e3
        data = SpaceTimeData(values=values, sites=((0.0,), (1.25,), (2.5,)), t0=-3)
        path = tmp_path / "data.csv"
        write_data_csv(data, path)
        back = read_data_csv(path)
        assert np.array_equal(back.values, data.values)
        assert back.sites == data.sites
        assert back.t0 == -3

    @settings(max_examples=20, deadline=None)
    @given(
        st.lists(
            st.floats(-1e15, 1e15, allow_nan=False, allow_infinity=False, width=64),
            min_size=4,
            max_size=8,
        )
    )
    def test_round_trip_property(self, tmp_path_factory, flat):
        values = np.array(flat).reshape(-1, 2) if len(flat) % 2 == 0 else np.array(flat[:-1]).reshape(-1, 2)
        data = SpaceTimeData(values=values, sites=((0.0, 1.0), (2.0, 3.0)))
        path = tmp_path_factory.mktemp("csv") / "x.csv"
        write_data_csv(data, path)
        assert np.array_equal(read_data_csv(path).values, values)

    def test_multidim_site_headers(self, tmp_path):
        data = SpaceTimeData(values=np.ones((2, 2)), sites=((0.0, 10.0), (1.0, -2.5)))
        path = tmp_path / "grid.csv"
        write_data_csv(data, path)
        assert read_data_csv(path).sites == ((0.0, 10.0), (1.0, -2.5))

    def test_malformed_row_named(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,0.0,1.0\n1,1.0,2.0\n2,oops,3.0\n")
        with pytest.raises(DataFormatError, match="row 3"):
            read_data_csv(path)

    def test_field_count_mismatch_named(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,0.0,1.0\n1,1.0\n")
        with pytest.raises(DataFormatError, match="row 2"):
            read_data_csv(path)

    def test_non_consecutive_time_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,0.0\n1,1.0\n3,2.0\n")
        with pytest.raises(DataFormatError, match="consecutive"):
            read_data_csv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataFormatError, match="empty"):
            read_data_csv(path)
