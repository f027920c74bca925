"""
衝突重症度の評価

車両同士は平面の中心衝突インパルス運動量モデルで delta-v を求め、全方位リスク曲線で
p(MAIS3+) を評価する。VRU（歩行者・自転車・スクーター・二輪車）は衝突速度のリスク曲線を使う。
重傷判定はしきい値との比較（以上で重傷）。
"""

import math
from typing import Mapping, Tuple

import numpy as np
from scipy.special import expit

from ..models.data_models import (
    ActorKind,
    ActorSeverity,
    CollisionOutcome,
    Contact,
    DeltaV,
    ImpactConfig,
    InjuryRisk,
    RiskCurve,
    SeriousInjuryThresholds,
    wrap_angle,
)
from ..models.harness_settings import SeveritySettings
from .error_handling import NotVruClass, SeparatingBodies
from .logging_config import get_harness_logger


logger = get_harness_logger("scoring")


def _impulse(impact: ImpactConfig) -> float:
    n = np.asarray(impact.contact_normal, dtype=float)
    v_rel = np.asarray(impact.velocity_ego, dtype=float) - np.asarray(impact.velocity_partner, dtype=float)
    closing = float(v_rel @ n)
    if closing <= 0.0:
        raise SeparatingBodies(closing)
    reduced_mass = impact.mass_ego * impact.mass_partner / (impact.mass_ego + impact.mass_partner)
    return (1.0 + impact.restitution) * reduced_mass * closing


def compute_delta_v(impact: ImpactConfig) -> DeltaV:
    """中心衝突の delta-v と各車体座標での PDOF

    Raises:
        SeparatingBodies: 法線方向の接近速度が0以下の場合
    """
    impulse = _impulse(impact)
    nx, ny = impact.contact_normal
    if impact.pdof_ego is not None:
        pdof_ego = wrap_angle(impact.pdof_ego)
    else:
        pdof_ego = wrap_angle(math.atan2(ny, nx) - impact.heading_ego)
    pdof_partner = wrap_angle(math.atan2(-ny, -nx) - impact.heading_partner)
    return DeltaV(impulse / impact.mass_ego, impulse / impact.mass_partner, pdof_ego, pdof_partner)


def post_impact_velocities(impact: ImpactConfig) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """衝突後の速度ベクトル（自車, 相手）"""
    impulse = _impulse(impact)
    n = np.asarray(impact.contact_normal, dtype=float)
    v1 = np.asarray(impact.velocity_ego, dtype=float) - impulse / impact.mass_ego * n
    v2 = np.asarray(impact.velocity_partner, dtype=float) + impulse / impact.mass_partner * n
    return (float(v1[0]), float(v1[1])), (float(v2[0]), float(v2[1]))


def delta_v_batch(mass_ego: np.ndarray, mass_partner: np.ndarray, velocity_ego: np.ndarray,
                  velocity_partner: np.ndarray, restitution: np.ndarray,
                  normal: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """多数の衝突をまとめて評価（速度・法線は N×2）。離反する組は NaN"""
    closing = np.einsum("ij,ij->i", velocity_ego - velocity_partner, normal)
    reduced_mass = mass_ego * mass_partner / (mass_ego + mass_partner)
    impulse = np.where(closing > 0.0, (1.0 + restitution) * reduced_mass * closing, np.nan)
    return impulse / mass_ego, impulse / mass_partner


def p_mais3_vehicle(dv: float, pdof: float, curve: RiskCurve) -> InjuryRisk:
    """車両乗員の p(MAIS3+)（delta-v と PDOF の方向項）"""
    exposure = (curve.intercept + curve.slope * max(dv, 0.0)
                + curve.cos_coef * math.cos(pdof) + curve.sin_coef * abs(math.sin(pdof)))
    return InjuryRisk(float(expit(exposure)))


def p_mais3_vru(impact_speed: float, kind: ActorKind, curves: Mapping[str, RiskCurve]) -> InjuryRisk:
    """VRU の p(MAIS3+)（衝突速度のロジスティック曲線）

    Raises:
        NotVruClass: 乗用車・大型車を指定した場合
    """
    if kind.is_vehicle:
        raise NotVruClass(kind.value)
    curve = curves[kind.value]
    return InjuryRisk(float(expit(curve.intercept + curve.slope * max(impact_speed, 0.0))))


def is_serious_injury(risk: InjuryRisk, kind: ActorKind, thresholds: SeriousInjuryThresholds) -> bool:
    if kind.is_vehicle:
        threshold = thresholds.vehicle_to_vehicle
    elif kind is ActorKind.PEDESTRIAN_CHILD:
        threshold = thresholds.child_pedestrian
    else:
        threshold = thresholds.other_vru
    return risk.p_mais3plus >= threshold


def _relative_velocity_normal(contact: Contact) -> Tuple[float, float]:
    rx = contact.ego_velocity[0] - contact.partner_velocity[0]
    ry = contact.ego_velocity[1] - contact.partner_velocity[1]
    norm = math.hypot(rx, ry)
    return (rx / norm, ry / norm) if norm > 0.0 else (0.0, 0.0)


def assess_contact(contact: Contact, partner_kind: ActorKind, settings: SeveritySettings,
                   ego_kind: ActorKind = ActorKind.PASSENGER_VEHICLE) -> CollisionOutcome:
    """接触から関係者ごとのリスクと重傷フラグを求める"""
    thresholds = settings.thresholds
    if not partner_kind.is_vehicle:
        impact_speed = math.hypot(*contact.ego_velocity)
        risk = p_mais3_vru(impact_speed, partner_kind, settings.vru_curves)
        serious = is_serious_injury(risk, partner_kind, thresholds)
        severities = (ActorSeverity("partner", partner_kind, risk.p_mais3plus, serious),)
        return CollisionOutcome(True, contact, severities, serious)

    normal = contact.normal
    delta_v = None
    for candidate in (normal, _relative_velocity_normal(contact)):
        if candidate == (0.0, 0.0):
            continue
        try:
            delta_v = compute_delta_v(ImpactConfig(
                mass_ego=settings.ego_mass,
                mass_partner=settings.mass_of(partner_kind),
                velocity_ego=contact.ego_velocity,
                velocity_partner=contact.partner_velocity,
                restitution=settings.restitution,
                contact_normal=candidate,
                heading_ego=contact.ego_heading,
                heading_partner=contact.partner_heading,
            ))
            break
        except SeparatingBodies:
            logger.debug(f"法線方向に離反しているため相対速度方向で再評価します: t={contact.time:.3f}")
    if delta_v is None:
        delta_v = DeltaV(0.0, 0.0, 0.0, 0.0)

    curve = settings.vehicle_curve
    ego_risk = p_mais3_vehicle(delta_v.dv_ego, delta_v.pdof_ego, curve)
    partner_risk = p_mais3_vehicle(delta_v.dv_partner, delta_v.pdof_partner, curve)
    severities = (
        ActorSeverity("ego", ego_kind, ego_risk.p_mais3plus, is_serious_injury(ego_risk, ego_kind, thresholds)),
        ActorSeverity("partner", partner_kind, partner_risk.p_mais3plus,
                      is_serious_injury(partner_risk, partner_kind, thresholds)),
    )
    return CollisionOutcome(True, contact, severities, any(s.serious_injury for s in severities), delta_v)


def score_trace_contact(contact, partner_kinds, settings: SeveritySettings) -> CollisionOutcome:
    """SimTrace の接触（無ければ非衝突）から結果を作る"""
    if contact is None:
        return CollisionOutcome.no_collision()
    return assess_contact(contact, partner_kinds[contact.partner_index], settings)
