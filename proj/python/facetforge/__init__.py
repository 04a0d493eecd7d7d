"""Python access to the facetforge knowledge base core."""

import json
import os
from pathlib import Path

from ._core import (
    Error,
    InvalidArgument,
    ModelError,
    NotFoundError,
    ParseError,
    SpanError,
    build_prompt,
    cluster,
    default_data_dir,
    dump_equal,
    hac,
    normalize_dump,
)
from ._core import Service as _Service


_PACKAGED_DATA = Path(__file__).resolve().parent / "data"


def resolve_data_dir():
    """$FACETFORGE_DATA_DIR, else data shipped in the wheel, else the build-time default."""
    if os.environ.get("FACETFORGE_DATA_DIR"):
        return os.environ["FACETFORGE_DATA_DIR"]
    if _PACKAGED_DATA.is_dir():
        return str(_PACKAGED_DATA)
    return default_data_dir()


class ApiError(Error):
    def __init__(self, status, body):
        super().__init__(f"{status} {body.get('code')}: {body.get('message')}")
        self.status = status
        self.body = body


class KnowledgeBases:
    """Named KB dumps served through the same handlers as the HTTP API.

    Methods return the decoded JSON body and raise ApiError on a non-200 status.
    """

    def __init__(self, kbs, data_dir=None):
        if isinstance(kbs, (str, bytes)) or hasattr(kbs, "__fspath__"):
            kbs = {"default": kbs}
        pairs = [(name, str(path)) for name, path in kbs.items()]
        self._svc = _Service(str(data_dir or resolve_data_dir()), pairs)

    @staticmethod
    def _decode(reply):
        status, body = reply
        body = json.loads(body)
        if status != 200:
            raise ApiError(status, body)
        return body

    def concept(self, name, kb=""):
        return self._decode(self._svc.concept(name, kb))

    def assertion(self, assertion_id, kb=""):
        return self._decode(self._svc.assertion(assertion_id, kb))

    def search(self, s="", p="", o="", kb=""):
        return self._decode(self._svc.search(s, p, o, kb))

    def autocomplete(self, prefix, kb=""):
        return self._decode(self._svc.autocomplete(prefix, kb))

    def kbs(self):
        return self._decode(self._svc.kbs())

    def qa(self, request):
        if not isinstance(request, str):
            request = json.dumps(request)
        return self._decode(self._svc.qa(request))

    def retrieve(self, question, k=5, method="tfidf", kb=""):
        return self._svc.retrieve(question, k, method, kb)

    def span(self, question, context, kb=""):
        return self._svc.span(question, context, kb)

    def verbalize(self, assertion_id, kb=""):
        return self._svc.verbalize(assertion_id, kb)


__all__ = [
    "ApiError",
    "Error",
    "InvalidArgument",
    "KnowledgeBases",
    "ModelError",
    "NotFoundError",
    "ParseError",
    "SpanError",
    "build_prompt",
    "cluster",
    "default_data_dir",
    "dump_equal",
    "hac",
    "normalize_dump",
    "resolve_data_dir",
]
