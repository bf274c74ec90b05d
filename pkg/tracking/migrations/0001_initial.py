import django.db.models.deletion
import django.utils.timezone
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='TrackingRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(choices=[('track', 'Suivi'), ('eval', 'Évaluation'), ('synth', 'Génération synthétique'), ('sweep', 'Balayage')], max_length=10, verbose_name='Type')),
                ('statut', models.CharField(choices=[('en_cours', 'En cours'), ('termine', 'Terminé'), ('echec', 'Échec')], default='en_cours', max_length=10, verbose_name='Statut')),
                ('config', models.JSONField(blank=True, default=dict, verbose_name='Configuration')),
                ('inputs', models.JSONField(blank=True, default=dict, verbose_name='Entrées')),
                ('outputs', models.JSONField(blank=True, default=dict, verbose_name='Sorties')),
                ('versions', models.JSONField(blank=True, default=dict, verbose_name='Versions')),
                ('seed', models.IntegerField(blank=True, null=True, verbose_name='Graine')),
                ('argv', models.TextField(blank=True, default='', verbose_name='Ligne de commande')),
                ('message', models.TextField(blank=True, default='', verbose_name='Message')),
                ('date_debut', models.DateTimeField(default=django.utils.timezone.now, verbose_name='Début')),
                ('date_fin', models.DateTimeField(blank=True, null=True, verbose_name='Fin')),
                ('wall_time', models.FloatField(blank=True, null=True, verbose_name='Durée (s)')),
            ],
            options={
                'verbose_name': 'Exécution',
                'verbose_name_plural': 'Exécutions',
                'ordering': ['-date_debut'],
            },
        ),
        migrations.CreateModel(
            name='SequenceEvaluation',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('sequence', models.CharField(max_length=200, verbose_name='Séquence')),
                ('mota', models.FloatField(verbose_name='MOTA')),
                ('idf1', models.FloatField(verbose_name='IDF1')),
                ('idp', models.FloatField(verbose_name='IDP')),
                ('idr', models.FloatField(verbose_name='IDR')),
                ('recall', models.FloatField(verbose_name='Rappel')),
                ('precision', models.FloatField(verbose_name='Précision')),
                ('fp', models.IntegerField(verbose_name='Faux positifs')),
                ('fn', models.IntegerField(verbose_name='Faux négatifs')),
                ('idsw', models.IntegerField(verbose_name="Changements d'identité")),
                ('gt', models.IntegerField(verbose_name='Objets GT')),
                ('matches', models.IntegerField(verbose_name='Appariements')),
                ('predictions', models.IntegerField(verbose_name='Prédictions')),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='evaluations', to='tracking.trackingrun', verbose_name='Exécution')),
            ],
            options={
                'verbose_name': 'Évaluation de séquence',
                'verbose_name_plural': 'Évaluations de séquences',
                'ordering': ['run', 'id'],
            },
        ),
    ]
