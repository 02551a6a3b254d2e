# Export Engine - Main entry point for all export functionality
# This file serves as the main interface, delegating to specialized modules

from exports.csv_exporter import csv_path, export_table_csv, table_to_csv_text
from exports.manifest_exporter import build_manifest, export_manifest, manifest_path, read_manifest

__all__ = ['csv_path', 'export_table_csv', 'table_to_csv_text', 'build_manifest', 'export_manifest',
           'manifest_path', 'read_manifest']
