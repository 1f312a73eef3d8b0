"""Cesaro operators on rooted directed trees."""
