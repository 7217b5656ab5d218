"""Packet-level discrete-event simulator of LTE-WLAN aggregation (LWA) and LWIP offload."""

__version__ = "0.1.0"
