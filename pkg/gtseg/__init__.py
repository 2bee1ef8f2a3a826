"""
gtseg: GT U-Net segmentation with a Fourier-descriptor shape loss.
"""
__version__ = "0.1.0"
