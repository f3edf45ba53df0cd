"""Test suite for the thermoacoustic tomography lab"""
