"""Figure rendering for cell-motility CSV exports."""

from .render import PanelSpec, load_spec, render_panels

__all__ = ["PanelSpec", "load_spec", "render_panels"]
