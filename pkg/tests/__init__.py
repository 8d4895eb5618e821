"""Tests for the twigkit package"""
