"""Service surface: session persistence, deterministic trial runner/replay,
and the HTTP + stream gateway binding the engine together."""
