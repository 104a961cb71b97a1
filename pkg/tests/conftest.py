import pytest

from stresskit import synth, textgen
from stresskit.backends import MockChatBackend, MockTTSBackend
from stresskit.config import DEFAULT_VOICES
from stresskit.corpus import AudioSample, StressPattern, Transcription

ANSWER_CALL = (
    "The speaker is emphasizing that the requested action was to call "
    "as opposed to any other action."
)
ANSWER_YESTERDAY = "The speaker is emphasizing that the action had to happen yesterday."
DESCRIPTION_CALL = ANSWER_CALL.rstrip(".")


def make_audio_sample(
    text="I asked you to call her yesterday.",
    stressed=(4,),
    answers=(ANSWER_CALL, ANSWER_YESTERDAY),
    label_index=0,
    description=DESCRIPTION_CALL,
    sample_id="s000",
    audio_ref="audio/s000.wav",
    voice_id="en_female_mid",
    gender="female",
    duration_s=1.0,
    verified="unverified",
):
    t = Transcription(text)
    return AudioSample(
        id=sample_id,
        audio_ref=audio_ref,
        transcription=t,
        stress=StressPattern.from_indices(stressed, len(t.words)),
        description=description,
        answers=answers,
        label_index=label_index,
        voice_id=voice_id,
        gender=gender,
        duration_s=duration_s,
        verified=verified,
    )


@pytest.fixture
def fixture_sample():
    return make_audio_sample()


@pytest.fixture(scope="session")
def mock_corpus(tmp_path_factory):
    """Five-text pipeline corpus rendered with mocks: (texts, audio, root)."""
    root = tmp_path_factory.mktemp("mock_corpus")
    texts, _ = textgen.generate_corpus(MockChatBackend(), 5, seed=99)
    audio = synth.expand_corpus(MockTTSBackend(), texts, 99, DEFAULT_VOICES, root)
    return texts, audio, root
