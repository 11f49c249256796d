"""Link-level Monte Carlo simulator for an 802.16 OFDM physical layer.

Three chains are assembled from the modules in this package: adaptive
modulation OFDM (baseline), OFDM with two-branch Alamouti transmit diversity,
and OFDM with a rate-1/3 turbo code.
"""

__version__ = "0.1.0"
