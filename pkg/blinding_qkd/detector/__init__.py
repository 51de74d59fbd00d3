"""Gate-level detector model and calibration"""
