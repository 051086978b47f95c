"""Clients for the external vision-language model used in zero-shot runs."""

from __future__ import annotations

import base64
import hashlib
import io
import os
from typing import Protocol

import numpy as np

from ..errors import ClientError


class VlmClient(Protocol):
    def complete(self, prompt: str, image: np.ndarray, model: str, temperature: float) -> str: ...


class MockVlmClient:
    """Deterministic stand-in: scripted responses, or an echo of the inputs."""

    def __init__(self, responses: list[str] | None = None, constant_response: str | None = None):
        self.responses = list(responses) if responses is not None else None
        self.constant_response = constant_response
        self.calls: list[dict] = []

    def complete(self, prompt: str, image: np.ndarray, model: str, temperature: float) -> str:
        digest = hashlib.sha256(prompt.encode() + image.tobytes()).hexdigest()[:8]
        self.calls.append(
            {"prompt": prompt, "image_shape": image.shape, "model": model, "temperature": temperature}
        )
        if self.responses is not None:
            if not self.responses:
                raise ClientError("mock VLM ran out of scripted responses")
            return self.responses.pop(0)
        if self.constant_response is not None:
            return self.constant_response
        return f"Entity #1 may cause a collision (mock {digest})"


def _image_to_png_b64(image: np.ndarray) -> str:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(image, mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


class HttpVlmClient:
    """Minimal OpenAI-style multimodal chat client.

    Credentials come from VLM_API_KEY / VLM_API_BASE; never from config files.
    """

    def __init__(self, base_url: str | None = None, api_key: str | None = None, timeout: float = 120.0):
        self.base_url = (base_url or os.environ.get("VLM_API_BASE", "")).rstrip("/")
        self.api_key = api_key or os.environ.get("VLM_API_KEY", "")
        self.timeout = timeout
        if not self.base_url:
            raise ClientError("no VLM endpoint configured (set VLM_API_BASE)")

    def complete(self, prompt: str, image: np.ndarray, model: str, temperature: float) -> str:
        import httpx

        payload = {
            "model": model,
            "temperature": temperature,
            "messages": [
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": prompt},
                        {
                            "type": "image_url",
                            "image_url": {"url": "data:image/png;base64," + _image_to_png_b64(image)},
                        },
                    ],
                }
            ],
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        try:
            response = httpx.post(
                f"{self.base_url}/chat/completions", json=payload, headers=headers, timeout=self.timeout
            )
            response.raise_for_status()
            body = response.json()
            return body["choices"][0]["message"]["content"]
        except ClientError:
            raise
        except Exception as exc:  # noqa: BLE001 - transport errors become ClientError
            raise ClientError(f"VLM request failed: {exc}") from exc
