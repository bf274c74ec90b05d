from datetime import timedelta

from django.db import models
from django.utils import timezone


class TrackingRun(models.Model):
    """
    One execution of a management command (track, eval, synth or sweep).

    The JSON fields hold everything needed to replay the run.
    """
    KIND_CHOICES = [
        ('track', 'Suivi'),
        ('eval', 'Évaluation'),
        ('synth', 'Génération synthétique'),
        ('sweep', 'Balayage'),
    ]

    STATUT_CHOICES = [
        ('en_cours', 'En cours'),
        ('termine', 'Terminé'),
        ('echec', 'Échec'),
    ]

    kind = models.CharField(
        max_length=10,
        choices=KIND_CHOICES,
        verbose_name='Type'
    )
    statut = models.CharField(
        max_length=10,
        choices=STATUT_CHOICES,
        default='en_cours',
        verbose_name='Statut'
    )
    config = models.JSONField(
        default=dict,
        blank=True,
        verbose_name='Configuration'
    )
    inputs = models.JSONField(
        default=dict,
        blank=True,
        verbose_name='Entrées'
    )
    outputs = models.JSONField(
        default=dict,
        blank=True,
        verbose_name='Sorties'
    )
    versions = models.JSONField(
        default=dict,
        blank=True,
        verbose_name='Versions'
    )
    seed = models.IntegerField(
        null=True,
        blank=True,
        verbose_name='Graine'
    )
    argv = models.TextField(
        blank=True,
        default='',
        verbose_name='Ligne de commande'
    )
    message = models.TextField(
        blank=True,
        default='',
        verbose_name='Message'
    )
    date_debut = models.DateTimeField(
        default=timezone.now,
        verbose_name='Début'
    )
    date_fin = models.DateTimeField(
        null=True,
        blank=True,
        verbose_name='Fin'
    )
    wall_time = models.FloatField(
        null=True,
        blank=True,
        verbose_name='Durée (s)'
    )

    class Meta:
        verbose_name = 'Exécution'
        verbose_name_plural = 'Exécutions'
        ordering = ['-date_debut']

    def __str__(self):
        return f"{self.get_kind_display()} #{self.pk} - {self.get_statut_display()} ({self.date_debut.strftime('%d/%m/%Y %H:%M')})"

    def finish(self, outputs=None, wall_time=None):
        """
        Mark the run as done.
        """
        if outputs is not None:
            self.outputs = outputs
        self.wall_time = wall_time
        self.statut = 'termine'
        self.date_fin = timezone.now()
        self.save()

    def fail(self, message):
        self.statut = 'echec'
        self.message = message
        self.date_fin = timezone.now()
        self.save()

    def is_stale(self, hours):
        """
        Still running after ``hours`` hours.
        """
        return self.statut == 'en_cours' and timezone.now() - self.date_debut > timedelta(hours=hours)

    def manifest(self):
        """
        The replayable description of this run.
        """
        return {
            'run_id': self.pk,
            'kind': self.kind,
            'status': self.statut,
            'config': self.config,
            'inputs': self.inputs,
            'outputs': self.outputs,
            'versions': self.versions,
            'seed': self.seed,
            'argv': self.argv,
            'started': self.date_debut.isoformat(),
            'finished': self.date_fin.isoformat() if self.date_fin else None,
            'wall_time': self.wall_time,
            'message': self.message,
        }


class SequenceEvaluation(models.Model):
    """
    Metrics of one sequence (or the aggregate row) for an evaluation run.
    """
    run = models.ForeignKey(
        TrackingRun,
        on_delete=models.CASCADE,
        related_name='evaluations',
        verbose_name='Exécution'
    )
    sequence = models.CharField(
        max_length=200,
        verbose_name='Séquence'
    )
    mota = models.FloatField(verbose_name='MOTA')
    idf1 = models.FloatField(verbose_name='IDF1')
    idp = models.FloatField(verbose_name='IDP')
    idr = models.FloatField(verbose_name='IDR')
    recall = models.FloatField(verbose_name='Rappel')
    precision = models.FloatField(verbose_name='Précision')
    fp = models.IntegerField(verbose_name='Faux positifs')
    fn = models.IntegerField(verbose_name='Faux négatifs')
    idsw = models.IntegerField(verbose_name='Changements d\'identité')
    gt = models.IntegerField(verbose_name='Objets GT')
    matches = models.IntegerField(verbose_name='Appariements')
    predictions = models.IntegerField(verbose_name='Prédictions')

    class Meta:
        verbose_name = 'Évaluation de séquence'
        verbose_name_plural = 'Évaluations de séquences'
        ordering = ['run', 'id']

    def __str__(self):
        return f"{self.sequence}: MOTA {self.mota:.4f} / IDF1 {self.idf1:.4f}"

    @classmethod
    def from_row(cls, run, sequence, row):
        """
        Build (unsaved) from a metrics row as produced by ``SequenceMetrics.as_row``.
        """
        return cls(
            run=run,
            sequence=sequence,
            mota=row['MOTA'],
            idf1=row['IDF1'],
            idp=row['IDP'],
            idr=row['IDR'],
            recall=row['Recall'],
            precision=row['Precision'],
            fp=row['FP'],
            fn=row['FN'],
            idsw=row['IDSW'],
            gt=row['GT'],
            matches=row['Matches'],
            predictions=row['Predictions'],
        )

    def as_dict(self):
        return {
            'sequence': self.sequence,
            'MOTA': self.mota, 'IDF1': self.idf1, 'IDP': self.idp, 'IDR': self.idr,
            'Recall': self.recall, 'Precision': self.precision,
            'FP': self.fp, 'FN': self.fn, 'IDSW': self.idsw, 'GT': self.gt,
            'Matches': self.matches, 'Predictions': self.predictions,
        }
