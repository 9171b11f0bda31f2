"""Client side of the external model/generator bridge.

External classifiers and generators run as child processes speaking
newline-delimited JSON over stdin/stdout (one request line, one response
line, matching integer ids). This keeps them true black boxes: the toolkit
sees raw rows in, labels and confidences out, and nothing else.

Protocol version "limi-bridge/1". Operations:

    {"id": 1, "op": "hello"}
        -> {"id": 1, "ok": true, "result": {"version": "limi-bridge/1",
            "name": ..., "kind": "model", "n_features": 13}}
           (generators report "kind": "generator" and "latent_dim")
    {"id": 2, "op": "predict", "rows": [[...], ...]}
        -> {"id": 2, "ok": true, "result": {"labels": [...], "scores": [...]}}
    {"id": 3, "op": "decode", "latents": [[...], ...]}
        -> {"id": 3, "ok": true, "result": {"rows": [[...], ...]}}
    {"id": 4, "op": "shutdown"}
        -> {"id": 4, "ok": true, "result": {}} and the process exits 0

Batches are capped at 4096 items per request; the client splits larger
calls. Any malformed response, id mismatch, error response, timeout, or
process death raises BridgeFailure.
"""

from __future__ import annotations

import json
import select
import subprocess

import numpy as np

from .errors import BridgeFailure
from .models import Prediction
from .schema import Row, Schema

BRIDGE_VERSION = "limi-bridge/1"
MAX_BATCH = 4096


class BridgeChannel:
    """Single request/response channel to a child process (strictly sequential)."""

    def __init__(self, command: list[str], timeout: float = 60.0) -> None:
        self.command = list(command)
        self.timeout = timeout
        self._next_id = 1
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BridgeFailure(f"cannot start bridge process: {exc}") from exc

    def request(self, op: str, **payload) -> dict:
        if self._proc.poll() is not None:
            raise BridgeFailure(
                f"bridge process exited with code {self._proc.returncode}"
            )
        req_id = self._next_id
        self._next_id += 1
        message = {"id": req_id, "op": op, **payload}
        try:
            self._proc.stdin.write(json.dumps(message) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BridgeFailure(f"bridge process pipe broken: {exc}") from exc

        line = self._read_line()
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BridgeFailure(f"bridge sent malformed JSON: {line[:200]!r}") from exc
        if not isinstance(response, dict):
            raise BridgeFailure("bridge response is not an object")
        if response.get("id") != req_id:
            raise BridgeFailure(
                f"bridge response id {response.get('id')!r} does not match {req_id}"
            )
        if not response.get("ok"):
            raise BridgeFailure(f"bridge error: {response.get('error', 'unknown')}")
        result = response.get("result")
        if not isinstance(result, dict):
            raise BridgeFailure("bridge response missing result object")
        return result

    def _read_line(self) -> str:
        stdout = self._proc.stdout
        ready, _, _ = select.select([stdout], [], [], self.timeout)
        if not ready:
            self._proc.kill()
            raise BridgeFailure(f"bridge timed out after {self.timeout}s")
        line = stdout.readline()
        if line == "":
            code = self._proc.poll()
            raise BridgeFailure(f"bridge closed its stdout (exit code {code})")
        return line

    def hello(self, expected_kind: str) -> dict:
        info = self.request("hello")
        if info.get("version") != BRIDGE_VERSION:
            raise BridgeFailure(
                f"bridge speaks {info.get('version')!r}, expected {BRIDGE_VERSION!r}"
            )
        if info.get("kind") != expected_kind:
            raise BridgeFailure(
                f"bridge is a {info.get('kind')!r}, expected {expected_kind!r}"
            )
        return info

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self.request("shutdown")
            except BridgeFailure:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()

    def __enter__(self) -> "BridgeChannel":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class BridgeModel:
    """Classifier handle backed by an external process."""

    def __init__(self, command: list[str], schema: Schema,
                 timeout: float = 60.0) -> None:
        self.schema = schema
        self.channel = BridgeChannel(command, timeout=timeout)
        info = self.channel.hello("model")
        self.name = info.get("name", "external-model")
        self.n_features = int(info.get("n_features", schema.n_columns))
        if self.n_features != schema.n_columns:
            raise BridgeFailure(
                f"bridge model expects {self.n_features} features, "
                f"schema has {schema.n_columns}"
            )

    def predict_batch(self, rows: list[Row]) -> tuple[np.ndarray, np.ndarray]:
        labels: list[int] = []
        scores: list[float] = []
        for start in range(0, len(rows), MAX_BATCH):
            chunk = rows[start:start + MAX_BATCH]
            result = self.channel.request(
                "predict", rows=[list(r) for r in chunk]
            )
            got_labels = result.get("labels")
            got_scores = result.get("scores")
            if (not isinstance(got_labels, list) or not isinstance(got_scores, list)
                    or len(got_labels) != len(chunk) or len(got_scores) != len(chunk)):
                raise BridgeFailure("bridge predict result malformed")
            labels.extend(int(v) for v in got_labels)
            scores.extend(float(v) for v in got_scores)
        return np.asarray(labels, dtype=np.int64), np.asarray(scores, dtype=np.float64)

    def predict(self, row: Row) -> Prediction:
        labels, scores = self.predict_batch([row])
        return Prediction(int(labels[0]), float(scores[0]))

    def close(self) -> None:
        self.channel.close()


class BridgeGenerator:
    """Generator handle backed by an external process."""

    def __init__(self, command: list[str], schema: Schema,
                 timeout: float = 60.0) -> None:
        self.schema = schema
        self.channel = BridgeChannel(command, timeout=timeout)
        info = self.channel.hello("generator")
        self.name = info.get("name", "external-generator")
        self.latent_dim = int(info["latent_dim"])

    def decode_batch(self, latents: np.ndarray) -> list[Row]:
        Z = np.atleast_2d(np.asarray(latents, dtype=np.float64))
        rows: list[Row] = []
        for start in range(0, len(Z), MAX_BATCH):
            chunk = Z[start:start + MAX_BATCH]
            result = self.channel.request("decode", latents=chunk.tolist())
            got = result.get("rows")
            if not isinstance(got, list) or len(got) != len(chunk):
                raise BridgeFailure("bridge decode result malformed")
            rows.extend(tuple(r) for r in got)
        return rows

    def decode(self, z: np.ndarray) -> Row:
        return self.decode_batch(np.asarray(z).reshape(1, -1))[0]

    def close(self) -> None:
        self.channel.close()
