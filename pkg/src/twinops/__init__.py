"""twinops: desk-scale digital twin of an optical transport network.

Subsystems: card-level topology graph (:mod:`twinops.topology`), alarm
root-cause localization (:mod:`twinops.faultloc`), occupancy-map navigation
(:mod:`twinops.navmap`), detection-to-slot card identification
(:mod:`twinops.cardid`), the edge service (:mod:`twinops.edged`), the QoS
meter simulation (:mod:`twinops.netqos`), and the scenario-driven CLI
(:mod:`twinops.cli`).
"""

__version__ = "0.1.0"
