"""Services package: trace output and verification"""
