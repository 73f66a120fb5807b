"""Unit tests for run manifests."""

from varda.cli.manifest import MANIFEST_FILE, MANIFEST_ID_KEY, RunManifest, read_manifest


def manifest(**changes):
    fields = {
        "command": "train",
        "config": {"lr": 1e-4, "weights.alpha3": 0.01},
        "seed": 3,
        "version": "1.0.0",
        "dataset_hashes": {"data": "ab" * 32},
        "started": 0.0,
    }
    fields.update(changes)
    return RunManifest(**fields)


class TestRunManifest:
    """Tests for manifest ids and files."""

    def test_id_is_stable(self):
        """Test that identical invocations share a 16-hex-digit id."""
        a, b = manifest(), manifest(started=1e9)
        assert a.id == b.id
        assert len(a.id) == 16
        int(a.id, 16)

    def test_id_tracks_content(self):
        """Test that config, seed and input hashes all change the id."""
        base = manifest().id
        assert manifest(seed=4).id != base
        assert manifest(config={"lr": 1e-3, "weights.alpha3": 0.01}).id != base
        assert manifest(dataset_hashes={"data": "cd" * 32}).id != base
        assert manifest(command="grid").id != base

    def test_outputs_do_not_change_id(self):
        m = manifest()
        before = m.id
        m.outputs.append("final.vckp")
        assert m.id == before

    def test_tag(self):
        m = manifest()
        assert m.tag() == {MANIFEST_ID_KEY: m.id}

    def test_write_and_finish(self, tmp_path):
        """Test that a run is marked running, then timed on finish."""
        m = manifest(inputs={"data": "/d"}, outputs=["loss_curve.csv"])
        path = m.write(tmp_path / "run")
        assert path.name == MANIFEST_FILE
        values = read_manifest(path)
        assert values["id"] == m.id
        assert values["wall_clock"] == "running"
        assert values["started"] == "1970-01-01T00:00:00Z"
        assert values["input.data"] == "/d"
        assert values["dataset_hash.data"] == "ab" * 32
        assert values["config.weights.alpha3"] == "0.01"
        assert values["output.0"] == "loss_curve.csv"

        m.finish(tmp_path / "run")
        finished = read_manifest(path)
        assert finished["wall_clock"] != "running"
        assert float(finished["wall_clock"]) > 0
        assert not (tmp_path / "run" / (MANIFEST_FILE + ".tmp")).exists()
