"""
慎重なAEBのサンプルプラグイン。
予測時間を延ばし、制動の立ち上がりを緩やかにしたAEBポリシーの実装例です。

使い方:
    cat-harness run --plugin-dir cat_harness/plugins/samples --policy cautious_aeb
"""
from cat_harness.plugins.base import PluginMetadata, PolicyPlugin
from cat_harness.policies.aeb import AebPolicy


class CautiousAebPolicy(AebPolicy):
    """早めに、穏やかに制動するAEB。"""

    HORIZON_MARGIN = 1.0

    def __init__(self):
        super().__init__(horizon=5.0, horizon_step=0.1, max_decel=7.0, jerk=20.0)

    @property
    def name(self) -> str:
        return "cautious_aeb"

    @property
    def description(self) -> str:
        return "AEB with a longer prediction horizon and a softer brake ramp"

    def configure(self, config) -> None:
        super().configure(config)
        self.horizon = config.aeb.ttc_threshold + self.HORIZON_MARGIN
        self.max_decel = min(self.max_decel, 7.0)
        self.jerk = min(self.jerk, 20.0)


class CautiousAebPlugin(PolicyPlugin):
    """慎重なAEBポリシーを提供するプラグイン。"""

    @property
    def metadata(self) -> PluginMetadata:
        return PluginMetadata(
            name="Cautious AEB",
            version="1.0.0",
            author="cat-harness developers",
            description="Earlier, gentler automatic emergency braking",
        )

    @property
    def policy_class(self) -> type:
        return CautiousAebPolicy
