"""Location-based social networking server: positioning engine, spatial
index, social graph, chat, and an HTTP gateway with a scriptable CLI."""

__version__ = "0.1.0"
