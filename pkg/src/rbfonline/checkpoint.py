"""Versioned JSON snapshots of fitted forecasters and their components."""
import json

from .errors import ProtocolError
from .estimators import EwrlsState
from .prototypes import PrototypeSet
from .rbfnet import LinearModel, RbfNetModel

FORMAT = "rbfonline-checkpoint"
VERSION = 1

_KINDS = {
    "rbfnet": RbfNetModel.from_dict,
    "ewrls": LinearModel.from_dict,
    "ridge": LinearModel.from_dict,
    "prototypes": PrototypeSet.from_dict,
    "ewrls_state": EwrlsState.from_dict,
}


def _kind(obj):
    if isinstance(obj, PrototypeSet):
        return "prototypes"
    if isinstance(obj, EwrlsState):
        return "ewrls_state"
    return obj.model_id


def dumps(obj):
    return json.dumps({"format": FORMAT, "version": VERSION, "kind": _kind(obj),
                       "payload": obj.to_dict()}, sort_keys=True)


def loads(text):
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ProtocolError("not a checkpoint document")
    if doc.get("version") != VERSION:
        raise ProtocolError(f"unsupported checkpoint version {doc.get('version')}")
    try:
        return _KINDS[doc["kind"]](doc["payload"])
    except KeyError:
        raise ProtocolError(f"unknown checkpoint kind {doc.get('kind')!r}") from None


def save(obj, path):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def load(path):
    with open(path) as fh:
        return loads(fh.read())
