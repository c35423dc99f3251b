"""Tests for condensation_quantizer"""
