import numpy as np
import pytest
from fastapi.testclient import TestClient

from embed_exporter import ExportJob, create_app, export_vectors


@pytest.fixture(scope="module")
def client(encoder):
    return TestClient(create_app(encoder, batch_size=16))


class TestProtocol:
    def test_single_text(self, client, encoder):
        response = client.post("/embed", json={"texts": ["transformer"]})
        assert response.status_code == 200
        payload = response.json()
        assert payload["dim"] == encoder.hidden_size
        assert len(payload["vectors"]) == 1
        assert len(payload["vectors"][0]) == encoder.hidden_size

    def test_empty_texts_is_400(self, client):
        assert client.post("/embed", json={"texts": []}).status_code == 400

    def test_blank_text_is_400(self, client):
        assert client.post("/embed", json={"texts": ["ok", "  "]}).status_code == 400

    def test_malformed_body_is_4xx(self, client):
        assert client.post("/embed", json={"text": ["x"]}).status_code == 422

    def test_deterministic_responses(self, client):
        first = client.post("/embed", json={"texts": ["neural network"]}).json()
        second = client.post("/embed", json={"texts": ["neural network"]}).json()
        assert first == second


class TestFileServeParity:
    def test_modes_bit_identical(self, tmp_path, client, encoder, tiny_model_dir):
        novkit = pytest.importorskip("novkit")
        entities = [f"term {i}" for i in range(40)]
        entity_file = tmp_path / "e.txt"
        entity_file.write_text("\n".join(entities) + "\n", encoding="utf-8")
        job = ExportJob(entities_path=entity_file, model_id=tiny_model_dir,
                        output_path=tmp_path / "s.env1", batch_size=16)
        export_vectors(job, encoder=encoder)
        store = novkit.load_vector_store(tmp_path / "s.env1")

        served = client.post("/embed", json={"texts": entities}).json()
        assert served["dim"] == store.dim
        for entity, row in zip(entities, served["vectors"]):
            from_file = store.get_vector(entity).values
            from_serve = np.asarray(row, dtype=np.float32)
            assert from_file.tobytes() == from_serve.tobytes()
