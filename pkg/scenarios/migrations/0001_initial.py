# Generated by Django 6.0.2 on 2026-10-19 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ScenarioRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('scenario', models.CharField(max_length=20)),
                ('seed', models.DecimalField(decimal_places=0, max_digits=20)),
                ('config', models.JSONField(default=dict)),
                ('statistics', models.JSONField(blank=True, default=dict)),
                ('status', models.CharField(choices=[('queued', 'Queued'), ('running', 'Running'), ('passed', 'All Flags Passed'), ('failed', 'Flags Failed'), ('error', 'Error')], default='queued', max_length=10)),
                ('error', models.TextField(blank=True, default='')),
                ('out_dir', models.CharField(blank=True, default='', max_length=500)),
                ('task_id', models.CharField(blank=True, default='', max_length=64)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='ReportFlag',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=200)),
                ('value', models.FloatField(blank=True, null=True)),
                ('comparison', models.CharField(max_length=2)),
                ('tolerance_key', models.CharField(max_length=50)),
                ('tolerance', models.FloatField()),
                ('passed', models.BooleanField(default=False)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='flags', to='scenarios.scenariorun')),
            ],
            options={
                'ordering': ['id'],
            },
        ),
    ]
