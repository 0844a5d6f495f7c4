try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib


def load_toml(path):
    with open(path, "rb") as fh:
        return tomllib.load(fh)
