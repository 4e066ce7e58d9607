"""
对话模块：多方会话的创建、加入、发言、结束，以及会话对智能体状态的影响
"""

from typing import List, Optional

from office_world.models.needs import NeedsModel, apply_restoration
from office_world.models.world import ConversationSession, WorldState
from office_world.utils.logger import get_logger

logger = get_logger("Conversation")

PASSWORD_KEY = "booking_password"


def sessions_at(world: WorldState, location: str) -> List[ConversationSession]:
    return [s for s in world.conversations.values() if s.location == location]


def _record(world: WorldState, session: ConversationSession, speaker: str, utterance: Optional[str]) -> None:
    text = utterance or ""
    session.transcript.append((world.tick, speaker, text))
    if text:
        _share_knowledge(world, session, speaker, text)


def _share_knowledge(world: WorldState, session: ConversationSession, speaker: str, text: str) -> None:
    """发言中出现口令原文时，其余参与者获得该知识"""
    secret = world.agents[speaker].knowledge.get(PASSWORD_KEY)
    if not secret or secret not in text:
        return
    for name in session.participants:
        agent = world.agents[name]
        if name != speaker and agent.knowledge.get(PASSWORD_KEY) != secret:
            agent.knowledge[PASSWORD_KEY] = secret
            logger.debug(f"{name} learned the booking password from {speaker}")


# ---------------------------------------------------------------- 检查


def check_initiate(world: WorldState, initiator: str, target: str) -> Optional[str]:
    agent = world.agents[initiator]
    if target not in world.agents:
        return f"{initiator} cannot find {target}."
    if target == initiator:
        return f"{initiator} cannot chat with themselves."
    if agent.conversation is not None:
        return f"{initiator} is already in {agent.conversation}."
    peer = world.agents[target]
    if peer.location != agent.location:
        return f"{initiator} cannot find {target} in the current location."
    if peer.conversation is not None:
        return f"{target} is already chatting in {peer.conversation}; use join_chat {peer.conversation}."
    return None


def check_join(world: WorldState, agent_name: str, session_id: str) -> Optional[str]:
    agent = world.agents[agent_name]
    session = world.conversations.get(session_id)
    if session is None or session.location != agent.location:
        return f"{agent_name} cannot find {session_id} in the current location."
    if agent.conversation is not None:
        return f"{agent_name} is already in {agent.conversation}."
    return None


def check_in_session(world: WorldState, agent_name: str, verb: str) -> Optional[str]:
    if world.agents[agent_name].conversation is None:
        return f"{agent_name} cannot perform action {verb}."
    return None


# ---------------------------------------------------------------- 效果


def apply_initiate(world: WorldState, initiator: str, target: str, utterance: Optional[str]) -> str:
    session_id = f"chat_{world.next_chat_id}"
    world.next_chat_id += 1
    session = ConversationSession(session_id, world.agents[initiator].location, [initiator, target])
    world.conversations[session_id] = session
    world.agents[initiator].conversation = session_id
    world.agents[target].conversation = session_id
    _record(world, session, initiator, utterance)
    return session_id


def apply_join(world: WorldState, agent_name: str, session_id: str, utterance: Optional[str]) -> None:
    session = world.conversations[session_id]
    session.participants.append(agent_name)
    world.agents[agent_name].conversation = session_id
    if utterance:
        _record(world, session, agent_name, utterance)


def apply_stay(world: WorldState, agent_name: str, utterance: Optional[str], model: NeedsModel) -> List[str]:
    """
    发言并为全部参与者恢复社交需求（每个时间步每个会话只恢复一次）

    返回:
    - 获得恢复的参与者名单
    """
    session = world.conversations[world.agents[agent_name].conversation]
    _record(world, session, agent_name, utterance)
    if session.last_restored_tick == world.tick:
        return []
    session.last_restored_tick = world.tick
    for name in session.participants:
        agent = world.agents[name]
        agent.needs = apply_restoration(agent.needs, "stay_chat", model)
    return list(session.participants)


def leave(world: WorldState, agent_name: str) -> Optional[str]:
    """让智能体离开当前会话；人数不足 2 的会话随之解散。返回被解散的会话 id"""
    agent = world.agents[agent_name]
    session_id = agent.conversation
    if session_id is None:
        return None
    agent.conversation = None
    session = world.conversations[session_id]
    session.participants.remove(agent_name)
    if len(session.participants) < 2:
        for name in session.participants:
            world.agents[name].conversation = None
        del world.conversations[session_id]
        logger.debug(f"{session_id} dissolved after {agent_name} left")
        return session_id
    return None


# ---------------------------------------------------------------- 可执行动作


def admissible_conversation_actions(world: WorldState, agent_name: str) -> List[str]:
    """
    计算对话相关的可执行动作

    参数:
    - world: 世界状态
    - agent_name: 智能体名称

    返回:
    - 会话中：stay_chat / end_chat；空闲：对同地点空闲同伴的 initiating_chat 与本地会话的 join_chat
    """
    agent = world.agents[agent_name]
    if agent.conversation is not None:
        return ["end_chat", "stay_chat"]
    commands = []
    for peer in world.locations[agent.location].agents:
        if check_initiate(world, agent_name, peer) is None:
            commands.append(f"initiating_chat {peer}")
    for session in sessions_at(world, agent.location):
        commands.append(f"join_chat {session.id}")
    return sorted(commands)

