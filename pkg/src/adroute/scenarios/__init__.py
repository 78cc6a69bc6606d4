"""Bundled scenario files for the packaged failure experiments."""
