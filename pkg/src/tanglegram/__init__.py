"""Tanglegram layouts, crossing numbers and the extremal search."""
