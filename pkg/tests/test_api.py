import pytest
from fastapi.testclient import TestClient

from maxreg.api import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def shallow_doc(client):
    resp = client.post(
        "/sample",
        json={"arch": {"n0": 2, "widths": [3], "rank": 2}, "init": {"seed": 5}},
    )
    assert resp.status_code == 200
    return resp.json()


class TestSample:
    def test_document_shape(self, shallow_doc):
        assert shallow_doc["n0"] == 2
        assert shallow_doc["widths"] == [3]
        assert len(shallow_doc["hidden"][0]) == 3

    def test_deterministic(self, client):
        body = {"arch": {"n0": 2, "widths": [2], "rank": 2}, "init": {"seed": 1}}
        a = client.post("/sample", json=body).json()
        b = client.post("/sample", json=body).json()
        assert a == b

    def test_bad_scheme(self, client):
        resp = client.post(
            "/sample",
            json={"arch": {"n0": 2, "widths": [2], "rank": 2}, "init": {"scheme": "x"}},
        )
        assert resp.status_code == 422


class TestCount:
    def test_count(self, client, shallow_doc):
        resp = client.post("/count", json={"network": shallow_doc})
        assert resp.status_code == 200
        assert resp.json()["regions"] == 7

    def test_custom_window(self, client, shallow_doc):
        resp = client.post(
            "/count",
            json={"network": shallow_doc, "window": [[-1, 1], [-1, 1]]},
        )
        assert resp.status_code == 200
        assert 1 <= resp.json()["regions"] <= 7

    def test_malformed_network(self, client):
        resp = client.post("/count", json={"network": {"bogus": 1}})
        assert resp.status_code == 422

    def test_size_cap(self, client):
        doc = client.post(
            "/sample", json={"arch": {"n0": 2, "widths": [41], "rank": 2}}
        ).json()
        resp = client.post("/count", json={"network": doc})
        assert resp.status_code == 413


class TestCountDb:
    def test_requires_two_classes(self, client, shallow_doc):
        resp = client.post("/count-db", json={"network": shallow_doc})
        assert resp.status_code == 422

    def test_pieces_bounded(self, client):
        doc = client.post(
            "/sample",
            json={
                "arch": {"n0": 2, "widths": [2], "rank": 2, "out_dim": 3},
                "init": {"seed": 2},
            },
        ).json()
        resp = client.post("/count-db", json={"network": doc})
        assert resp.status_code == 200
        body = resp.json()
        assert body["db_pieces"] <= 3 * body["regions"]


class TestApprox:
    def test_matches_exact_on_shallow(self, client, shallow_doc):
        resp = client.post(
            "/approx", json={"network": shallow_doc, "grid_pts": 512}
        )
        assert resp.status_code == 200
        assert resp.json()["regions"] == 7

    def test_grid_pts_validated(self, client, shallow_doc):
        resp = client.post(
            "/approx", json={"network": shallow_doc, "grid_pts": 100000}
        )
        assert resp.status_code == 422


class TestBounds:
    def test_table(self, client):
        resp = client.post(
            "/bounds", json={"n0": 2, "n_units": 3, "rank": 2}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["trivial_pattern_bound"] == 8
        assert body["max_regions_shallow"] == 7

    def test_expected_values_present_with_constants(self, client):
        resp = client.post(
            "/bounds",
            json={"n0": 1, "n_units": 2, "rank": 2, "c_grad": 1.0, "c_bias": 1.0},
        )
        assert resp.json()["expected_regions_upper"] == 128.0

    def test_rejects_r_above_n0(self, client):
        resp = client.post(
            "/bounds", json={"n0": 1, "n_units": 2, "rank": 2, "r": 2}
        )
        assert resp.status_code == 422
