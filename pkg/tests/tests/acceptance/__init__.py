'''
Package contains acceptance tests for rnls: full runs and verify
'''
