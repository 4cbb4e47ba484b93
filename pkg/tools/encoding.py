import abc
import collections.abc
import csv
import dataclasses
import enum
import io
import json
import math
import typing

import numpy as np

FLOAT_FORMAT = ".17g"


class JsonEncodable(metaclass=abc.ABCMeta):
    @abc.abstractmethod
    def __to_json__(self) -> typing.Any: ...


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x} cannot be emitted")
    text = format(x, FLOAT_FORMAT)
    if text == "-0":
        text = "0"
    return text


def encode(
    x: typing.Any, *, default: typing.Callable[[typing.Any], typing.Any] = lambda x: x
) -> typing.Any:
    """Lower `x` to plain JSON values; complex numbers become ``[re, im]``."""

    def impl(b: typing.Any) -> typing.Any:
        b = default(b)
        if isinstance(b, JsonEncodable):
            b = b.__to_json__()
        if b is None or isinstance(b, (bool, str)):
            return b
        if isinstance(b, enum.Enum):
            return b.value
        if isinstance(b, (np.bool_,)):
            return bool(b)
        if isinstance(b, (int, np.integer)):
            return int(b)
        if isinstance(b, (float, np.floating)):
            return float(b)
        if isinstance(b, (complex, np.complexfloating)):
            return [float(b.real), float(b.imag)]
        if isinstance(b, np.ndarray):
            return [impl(v) for v in b.tolist()]
        if isinstance(b, collections.abc.Mapping):
            out = {}
            for k, v in b.items():
                if not isinstance(k, str):
                    raise TypeError(f"key is not string {type(k)}")
                out[k] = impl(v)
            return out
        if isinstance(b, collections.abc.Sequence):
            return [impl(v) for v in b]
        if dataclasses.is_dataclass(b) and not isinstance(b, type):
            if hasattr(b, "to_dict"):
                return impl(b.to_dict())
            return impl(dataclasses.asdict(b))
        raise TypeError(f"invalid type {type(b)}")

    return impl(x)


def to_str(d: typing.Any) -> str:
    """Render encoded values as JSON text with 17 significant digits."""
    buf: list[str] = []

    def impl(d: typing.Any, indent: int) -> None:
        pad = "\n" + "  " * (indent + 1)
        if d is None:
            buf.append("null")
        elif d is True:
            buf.append("true")
        elif d is False:
            buf.append("false")
        elif isinstance(d, str):
            buf.append(json.dumps(d))
        elif isinstance(d, int):
            buf.append(str(d))
        elif isinstance(d, float):
            buf.append(format_float(d))
        elif isinstance(d, dict):
            if not d:
                buf.append("{}")
                return
            buf.append("{")
            comma = False
            for k, v in d.items():
                if comma:
                    buf.append(",")
                comma = True
                buf.append(pad)
                buf.append(json.dumps(k))
                buf.append(": ")
                impl(v, indent + 1)
            buf.append("\n" + "  " * indent + "}")
        elif isinstance(d, list):
            flat = all(not isinstance(v, (dict, list)) for v in d)
            buf.append("[")
            comma = False
            for v in d:
                if comma:
                    buf.append(", " if flat else ",")
                comma = True
                if not flat:
                    buf.append(pad)
                impl(v, indent + 1)
            if not flat and d:
                buf.append("\n" + "  " * indent)
            buf.append("]")
        else:
            raise TypeError(f"can't encode {d!r} to json")

    impl(encode(d), 0)
    return "".join(buf) + "\n"


def complex_from_pair(pair: typing.Any) -> complex:
    if isinstance(pair, (int, float)) and not isinstance(pair, bool):
        return complex(pair)
    if not isinstance(pair, collections.abc.Sequence) or len(pair) != 2:
        raise ValueError(f"expected [re, im], got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def write_csv(header: list[str], rows: typing.Iterable[typing.Sequence[float]]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(float(v)) for v in row])
    return out.getvalue()


def read_csv(text: str) -> tuple[list[str], np.ndarray]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    rows = [[float(v) for v in row] for row in reader if row]
    return header, np.asarray(rows, dtype=float).reshape(len(rows), len(header))
