import json
from datetime import datetime, timedelta

from palm.models import RunRecord, RunStatus


def _add(session, name: str, started_at: datetime, **fields) -> RunRecord:
    record = RunRecord(
        name=name,
        dataset="gas-furnace-standin",
        fuzzy_order="type1",
        learning="local",
        started_at=started_at,
        **fields,
    )
    session.add(record)
    session.commit()
    session.refresh(record)
    return record


class TestListRuns:
    def test_empty_ledger(self, client) -> None:
        response = client.get("/runs")
        assert response.status_code == 200
        assert response.json() == []

    def test_newest_first_and_limit(self, client, session) -> None:
        now = datetime(2026, 1, 1, 12, 0)
        _add(session, "old", now - timedelta(hours=2))
        _add(session, "new", now)
        _add(session, "mid", now - timedelta(hours=1))

        response = client.get("/runs")
        assert [r["name"] for r in response.json()] == ["new", "mid", "old"]

        response = client.get("/runs", params={"limit": 1})
        assert [r["name"] for r in response.json()] == ["new"]


class TestGetRun:
    def test_run_with_report(self, client, session, tmp_path) -> None:
        report_path = tmp_path / "report.json"
        report_path.write_text(json.dumps({"rmse": 0.1, "rule_count": 3}))
        record = _add(
            session,
            "done",
            datetime(2026, 1, 1),
            status=RunStatus.SUCCESS,
            rmse=0.1,
            report_path=str(report_path),
        )

        response = client.get(f"/runs/{record.id}")
        assert response.status_code == 200
        data = response.json()
        assert data["run"]["name"] == "done"
        assert data["run"]["status"] == "success"
        assert data["report"] == {"rmse": 0.1, "rule_count": 3}

    def test_run_without_report(self, client, session) -> None:
        record = _add(session, "running", datetime(2026, 1, 1))
        data = client.get(f"/runs/{record.id}").json()
        assert data["report"] is None

    def test_missing_run_returns_404(self, client) -> None:
        response = client.get("/runs/999")
        assert response.status_code == 404
        assert response.json()["detail"] == "Run not found"


class TestRunTrace:
    def test_trace_download(self, client, session, tmp_path) -> None:
        trace = tmp_path / "trace.csv"
        trace.write_text("k,y_d,y_hat\n1,0.5,0.4\n")
        record = _add(session, "traced", datetime(2026, 1, 1), trace_path=str(trace))

        response = client.get(f"/runs/{record.id}/trace")
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/csv")
        assert response.text.startswith("k,y_d,y_hat")

    def test_missing_trace_returns_404(self, client, session) -> None:
        record = _add(session, "untraced", datetime(2026, 1, 1))
        response = client.get(f"/runs/{record.id}/trace")
        assert response.status_code == 404
        assert response.json()["detail"] == "Trace not found"


class TestStatusFilter:
    def test_only_matching_runs(self, client, session) -> None:
        _add(session, "ok", datetime(2026, 1, 1), status=RunStatus.SUCCESS)
        _add(session, "broken", datetime(2026, 1, 2), status=RunStatus.FAILED)

        response = client.get("/runs", params={"status": "failed"})
        assert [r["name"] for r in response.json()] == ["broken"]

    def test_unknown_status_rejected(self, client) -> None:
        assert client.get("/runs", params={"status": "lost"}).status_code == 422
