"""Typhoon resilience assessment and hardening planning for transmission networks.

Modules follow the pipeline order: ``typhoon_field`` (storm scenarios and
wind), ``grid_case`` (network and geography), ``failure_model`` and
``feature_engine`` (unit and corridor failure probabilities),
``importance`` and ``ahp_decision`` (feature weights), ``load_shed`` and
``resilience_iise`` (resilience indices), ``strategy_eval`` (hardening
plans) and ``pipeline``/``cli`` to run it all from a config file.
"""

__version__ = "0.1.0"
