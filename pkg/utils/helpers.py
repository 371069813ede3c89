import click
import numpy as np

_verbose = True


def set_verbose(enabled):
    """Turn status lines on or off for the whole process"""
    global _verbose
    _verbose = bool(enabled)


def log_status(message, icon='✅'):
    """Write a status line to stderr so stdout stays machine-readable"""
    if _verbose:
        click.echo(f"{icon} {message}", err=True)


def ceil_div(a, b):
    return -(-a // b)


def round_up(value, multiple):
    return ceil_div(value, multiple) * multiple


def round_half_away_from_zero(values):
    values = np.asarray(values, dtype=np.float64)
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def parse_int_list(text, separator=','):
    """Parse '1,2,3' into a list of ints"""
    try:
        return [int(part) for part in text.split(separator) if part.strip()]
    except ValueError:
        raise ValueError(f"Expected a '{separator}'-separated list of integers, got '{text}'")


def parse_float_list(text, separator=','):
    try:
        return [float(part) for part in text.split(separator) if part.strip()]
    except ValueError:
        raise ValueError(f"Expected a '{separator}'-separated list of numbers, got '{text}'")
