"""Python access to the hatebench C++ core."""

try:
    from . import _hatebench as _core
except ImportError:  # build tree: the extension sits next to, not inside, the package
    import _hatebench as _core

ConfigError = _core.ConfigError
Error = _core.Error
clean = _core.clean
format_metric = _core.format_metric
load_sentence_embeddings = _core.load_sentence_embeddings
metrics = _core.metrics
read_csv = _core.read_csv
run_experiment = _core.run_experiment
strip_patterns = _core.strip_patterns
tokenize = _core.tokenize
write_fake_sentence_embeddings = _core.write_fake_sentence_embeddings

__all__ = [
    "ConfigError",
    "Error",
    "clean",
    "format_metric",
    "load_sentence_embeddings",
    "metrics",
    "read_csv",
    "run_experiment",
    "strip_patterns",
    "tokenize",
    "write_fake_sentence_embeddings",
]
