"""Training for the unrolled U-Net-thresholded TFD reconstruction network.

Consumes observation datasets written by the reconstruction package's
``gen`` command and produces `.uwb` weight bundles plus golden inference
vectors; the two components exchange data only through those file formats.
"""

__version__ = "0.1.0"
