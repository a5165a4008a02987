"""Thin HTTP client for the service.

Without a server URL the client mounts the FastAPI app in-process (same ASGI
surface a remote deployment exposes), so the CLI works standalone while all
logic still flows through the HTTP API.
"""

from __future__ import annotations

import time

import httpx


class ServiceError(Exception):
    pass


class ApiClient:
    def __init__(self, server=None, timeout=30.0):
        if server:
            self._client = httpx.Client(base_url=server.rstrip("/"), timeout=timeout)
        else:
            import warnings

            with warnings.catch_warnings():
                # this build of starlette warns about its own httpx usage
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _unwrap(self, resp):
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", resp.text)
            except Exception:
                detail = resp.text
            raise ServiceError(f"{resp.status_code}: {detail}")
        return resp

    def health(self):
        return self._unwrap(self._client.get("/health")).json()

    def problems(self):
        return self._unwrap(self._client.get("/problems")).json()

    def validate(self, config_text):
        resp = self._client.post("/configs/validate", json={"config_text": config_text})
        return self._unwrap(resp).json()

    def submit(self, config_text, workers=1, output_dir=None, preset=None, seeds=None):
        payload = {"config_text": config_text, "workers": workers}
        if output_dir is not None:
            payload["output_dir"] = output_dir
        if preset is not None:
            payload["preset"] = preset
        if seeds is not None:
            payload["seeds"] = seeds
        resp = self._client.post("/experiments", json=payload)
        return self._unwrap(resp).json()["job_id"]

    def status(self, job_id):
        return self._unwrap(self._client.get(f"/experiments/{job_id}")).json()

    def wait(self, job_id, poll_interval=1.0, on_poll=None):
        while True:
            st = self.status(job_id)
            if on_poll is not None:
                on_poll(st)
            if st["state"] in ("done", "failed"):
                return st
            time.sleep(poll_interval)

    def summary(self, job_id):
        return self._unwrap(self._client.get(f"/experiments/{job_id}/summary")).json()

    def report(self, job_id):
        return self._unwrap(self._client.get(f"/experiments/{job_id}/report")).text

    def report_dir(self, directory):
        resp = self._client.get("/reports", params={"dir": str(directory)})
        return self._unwrap(resp).text

    def check(self):
        return self._unwrap(self._client.post("/check")).json()
