import time
from typing import cast

import pint
from pint import Quantity

herdscent_ureg = pint.UnitRegistry()


def elapsed_since(start: float) -> Quantity:
    """Wall time since a :py:func:`time.perf_counter` reading, in seconds."""
    return cast(Quantity, (time.perf_counter() - start) * herdscent_ureg.second)


def parse_duration(text: str) -> Quantity:
    """Parses a duration such as ``"2 min"`` or ``"500 ms"``.

    Raises a ValueError if the text is not a non-negative quantity of
    dimensionality [time]. A bare number is read as seconds.
    """
    value = herdscent_ureg.Quantity(text)
    if value.dimensionless:
        value = float(value.magnitude) * herdscent_ureg.second
    if not value.check("[time]"):
        raise ValueError(
            f"Duration {text!r} must have dimensionality [time], got {value.dimensionality}."
        )
    if value.magnitude < 0:
        raise ValueError(f"Duration {text!r} must not be negative.")
    return cast(Quantity, value.to("second"))


def seconds(value: Quantity) -> float:
    return float(value.to("second").magnitude)
