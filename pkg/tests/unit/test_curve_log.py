"""Unit tests for the loss-curve CSV."""

import pytest

from varda.errors import FormatError
from varda.objectives import COLUMNS, LossCurveLog, read_loss_curve
from varda.types import LossBreakdown


def breakdown(total):
    return LossBreakdown(
        seg_loss=1.0,
        recon_loss_S=0.5,
        kl_S=0.25,
        recon_loss_T=0.5,
        cond_entropy_T=0.75,
        kl_T=0.125,
        discrepancy=0.1,
        total=total,
    )


class TestLossCurveLog:
    """Tests for appending, resuming and reading the loss CSV."""

    def test_header_and_rows(self, tmp_path):
        """Test the column order and the derived columns."""
        log = LossCurveLog(tmp_path / "loss_curve.csv")
        log.append(0, breakdown(3.0), 1e-4)
        log.append(1, breakdown(2.5), 1e-4)
        header = (tmp_path / "loss_curve.csv").read_text().splitlines()[0]
        assert tuple(header.split(",")) == COLUMNS
        rows = read_loss_curve(tmp_path / "loss_curve.csv")
        assert [r["iter"] for r in rows] == [0, 1]
        assert rows[0]["remainder_S"] == 0.75
        assert rows[0]["target_loss"] == 1.375
        assert rows[1]["total"] == 2.5

    def test_floats_round_trip_exactly(self, tmp_path):
        """Test that values are written with full precision."""
        log = LossCurveLog(tmp_path / "c.csv")
        log.append(0, breakdown(0.1 + 0.2), 8.1e-5)
        row = read_loss_curve(tmp_path / "c.csv")[0]
        assert row["total"] == 0.1 + 0.2
        assert row["lr"] == 8.1e-5

    def test_resume_drops_later_rows(self, tmp_path):
        """Test that reopening at iteration i keeps only rows before i."""
        path = tmp_path / "c.csv"
        log = LossCurveLog(path)
        for i in range(5):
            log.append(i, breakdown(float(i)), 1e-4)
        resumed = LossCurveLog(path, resume_from=3)
        resumed.append(3, breakdown(9.0), 1e-4)
        rows = read_loss_curve(path)
        assert [r["iter"] for r in rows] == [0, 1, 2, 3]
        assert rows[-1]["total"] == 9.0

    def test_fresh_log_truncates(self, tmp_path):
        """Test that opening without resume starts over."""
        path = tmp_path / "c.csv"
        LossCurveLog(path).append(0, breakdown(1.0), 1e-4)
        LossCurveLog(path)
        assert read_loss_curve(path) == []

    def test_bad_header(self, tmp_path):
        """Test that a foreign CSV is rejected."""
        path = tmp_path / "c.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(FormatError):
            read_loss_curve(path)

    def test_bad_row(self, tmp_path):
        """Test that a non-numeric row names its line."""
        path = tmp_path / "c.csv"
        path.write_text(",".join(COLUMNS) + "\n0,x,0,0,0,0,0\n")
        with pytest.raises(FormatError) as info:
            read_loss_curve(path)
        assert info.value.line == 2
