"""
Policy plugin system package.
"""

from .base import PluginManager, PluginMetadata, PolicyPlugin, plugin_manager

__all__ = [
    'PolicyPlugin',
    'PluginMetadata',
    'PluginManager',
    'plugin_manager',
]
