"""Framework models consulted while resolving calls."""

from __future__ import annotations

from typing import Iterable, Optional

from ..sdkdecls import SdkDeclarations
from .base import CallSite, Plugin, PluginManager
from .function import FunctionPlugin
from .sdk import SdkPlugin
from .storage import StoragePlugin

PLUGIN_NAMES = ("storage", "function", "sdk")


def default_plugins(sdk: Optional[SdkDeclarations], disabled: Iterable[str] = ()) -> PluginManager:
    """The built-in plugins in priority order: Storage, Function, SDK."""
    unknown = set(disabled) - set(PLUGIN_NAMES)
    if unknown:
        raise ValueError(f"unknown plugin(s) {sorted(unknown)}; expected some of {PLUGIN_NAMES}")
    return PluginManager([StoragePlugin(), FunctionPlugin(), SdkPlugin(sdk)], disabled)


__all__ = ["CallSite", "FunctionPlugin", "PLUGIN_NAMES", "Plugin", "PluginManager", "SdkPlugin",
           "StoragePlugin", "default_plugins"]
