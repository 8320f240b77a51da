"""Client used by the CLI: in-process ASGI by default, remote URL when configured."""

from __future__ import annotations

import httpx

from ..errors import SeqDesignError


class ServiceError(SeqDesignError):
    """The service rejected a request or failed."""

    def __init__(self, status_code: int, detail):
        self.status_code = status_code
        self.detail = detail
        super().__init__(f"service returned {status_code}: {detail}")


class ServiceClient:
    """Issues requests against the service.

    Without a base URL the ASGI app is driven in-process, so no server needs
    to be running and results are identical to a deployed instance.
    """

    def __init__(self, base_url: str | None = None):
        if base_url:
            self._client = httpx.Client(base_url=base_url, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DeprecationWarning)
                from fastapi.testclient import TestClient

            from .app import create_app

            self._client = TestClient(create_app())

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _unwrap(self, response: httpx.Response) -> dict:
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise ServiceError(response.status_code, detail)
        return response.json()

    def get(self, path: str) -> dict:
        return self._unwrap(self._client.get(path))

    def post(self, path: str, payload: dict) -> dict:
        return self._unwrap(self._client.post(path, json=payload))
