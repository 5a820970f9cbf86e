from .bundle import EXPORTABLE_FAMILIES, ExportError, build_graph, export_web
from .latency import latency_probe
from .runtime import BundleError, BundleRuntime, bilinear_resize

__all__ = [name for name in dir() if not name.startswith("_")]
