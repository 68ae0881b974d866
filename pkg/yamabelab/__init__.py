"""Numerical laboratory for Yamabe blow-up profiles in dimensions 10 and 11."""

# (major, minor, patch, release level, serial)
VERSION = (0, 3, 0, "final", 0)

RELEASE_SUFFIXES = {"alpha": "a", "beta": "b", "rc": "rc", "dev": ".dev"}


def format_version(version):
    """PEP 440 string for a VERSION tuple; a zero patch number is dropped."""
    major, minor, patch, level, serial = version
    parts = [major, minor] if patch == 0 else [major, minor, patch]
    formatted = ".".join(map(str, parts))
    if level != "final":
        formatted += f"{RELEASE_SUFFIXES[level]}{serial}"
    return formatted


__version__ = format_version(VERSION)
