"""Mission presets, the end-to-end run pipeline and its file outputs."""
